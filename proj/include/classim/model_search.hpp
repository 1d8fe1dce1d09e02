#pragma once

// Classical measurement models: LP search over a unitary ensemble, explicit
// constructions, post-processing elimination and direct-sum projection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "classim/errors.hpp"
#include "classim/linalg.hpp"
#include "classim/lp.hpp"
#include "classim/measurements.hpp"
#include "classim/strategy.hpp"

namespace classim {

inline constexpr double kWeightPrune = 1e-12;

/// Certificate of M_{a|x}^v = Σ_{λ,k} q̃(a,λ|x,k) U_λ|k⟩⟨k|U_λ†.
/// response[λ] is indexed ((x·d + k)·o + a).
struct ClassicalModel {
  int dim = 0;
  int settings = 0;
  int outcomes = 0;
  double v = 0.0;
  std::vector<UnitaryMatrix> bases;
  std::vector<double> weights;
  std::vector<std::vector<double>> response;

  std::size_t slot(int a, int x, int k) const {
    return static_cast<std::size_t>((x * dim + k) * outcomes + a);
  }
  double q(int a, int lambda, int x, int k) const {
    return response[static_cast<std::size_t>(lambda)][slot(a, x, k)];
  }
  int devices() const { return static_cast<int>(bases.size()); }

  /// Σ_{λ,k} q̃(a,λ|x,k) E_{k|λ}.
  CMatrix reconstructed(int x, int a) const {
    CMatrix out = CMatrix::Zero(dim, dim);
    for (int l = 0; l < devices(); ++l) {
      for (int k = 0; k < dim; ++k) {
        const double w = q(a, l, x, k);
        if (w != 0.0) out += w * bases[static_cast<std::size_t>(l)].projector(k);
      }
    }
    return out;
  }

  /// Throws StructuralError when a structural invariant fails.
  void validate(double weight_tol = 1e-9, double response_tol = 1e-8) const {
    if (bases.size() != weights.size() || bases.size() != response.size()) {
      throw StructuralError("model: bases, weights and responses differ in length");
    }
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) throw StructuralError("model: visibility outside [0, 1]");
    double total = 0.0;
    for (std::size_t l = 0; l < bases.size(); ++l) {
      if (bases[l].dim() != dim) throw StructuralError("model: device " + std::to_string(l) + " has wrong dimension");
      if (weights[l] < 0.0) throw StructuralError("model: negative weight for device " + std::to_string(l));
      if (response[l].size() != static_cast<std::size_t>(settings * dim * outcomes)) {
        throw StructuralError("model: response table of device " + std::to_string(l) + " has wrong size");
      }
      total += weights[l];
      for (int x = 0; x < settings; ++x) {
        for (int k = 0; k < dim; ++k) {
          double s = 0.0;
          for (int a = 0; a < outcomes; ++a) {
            const double r = q(a, static_cast<int>(l), x, k);
            if (r < -response_tol) throw StructuralError("model: negative response entry");
            s += r;
          }
          if (std::abs(s - weights[l]) > response_tol) {
            throw StructuralError("model: responses of device " + std::to_string(l) + " do not sum to its weight");
          }
        }
      }
    }
    if (std::abs(total - 1.0) > weight_tol) throw StructuralError("model: weights do not sum to 1");
  }
};

/// Projective form of a classical model: weighted families of commuting
/// projective measurements.
struct ProjectiveCommutingModel {
  int dim = 0;
  int settings = 0;
  int outcomes = 0;
  std::vector<double> weights;
  std::vector<std::vector<std::vector<CMatrix>>> projectors;  // [λ̃][x][a]

  int terms() const { return static_cast<int>(weights.size()); }

  CMatrix reconstructed(int x, int a) const {
    CMatrix out = CMatrix::Zero(dim, dim);
    for (std::size_t t = 0; t < weights.size(); ++t) {
      out += weights[t] * projectors[t][static_cast<std::size_t>(x)][static_cast<std::size_t>(a)];
    }
    return out;
  }

  struct Residuals {
    double projectivity = 0.0;  // ‖F_a F_a' − δ F_a‖
    double commutation = 0.0;   // ‖[F_{a|x}, F_{a'|x'}]‖
    double completeness = 0.0;  // ‖Σ_a F_{a|x} − 𝟙‖
  };

  Residuals residuals() const {
    Residuals r;
    const CMatrix id = CMatrix::Identity(dim, dim);
    for (const auto& fam : projectors) {
      for (int x = 0; x < settings; ++x) {
        CMatrix s = CMatrix::Zero(dim, dim);
        for (int a = 0; a < outcomes; ++a) {
          const CMatrix& f = fam[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)];
          s += f;
          for (int b = 0; b < outcomes; ++b) {
            const CMatrix& g = fam[static_cast<std::size_t>(x)][static_cast<std::size_t>(b)];
            r.projectivity = std::max(r.projectivity, max_abs(f * g - (a == b ? f : CMatrix::Zero(dim, dim))));
          }
          for (int y = x + 1; y < settings; ++y) {
            for (int b = 0; b < outcomes; ++b) {
              r.commutation = std::max(
                  r.commutation, max_abs(commutator(f, fam[static_cast<std::size_t>(y)][static_cast<std::size_t>(b)])));
            }
          }
        }
        r.completeness = std::max(r.completeness, max_abs(s - id));
      }
    }
    return r;
  }
};

/// max_{a,x} ‖Φ_v(M_{a|x}) − Σ q̃ E‖_max.
inline double reconstruct(const ClassicalModel& model, const MeasurementSet& m) {
  if (model.dim != m.dim() || model.settings != m.settings() || model.outcomes != m.outcomes()) {
    throw StructuralError("reconstruct: model and measurement set have different shapes");
  }
  double r = 0.0;
  for (int x = 0; x < m.settings(); ++x) {
    for (int a = 0; a < m.outcomes(); ++a) {
      r = std::max(r, max_abs(depolarize_operator(m(x, a), model.v) - model.reconstructed(x, a)));
    }
  }
  return r;
}

struct StochasticTerm {
  double weight = 0.0;
  std::vector<int> choice;  // column z → outcome
};

/// Greedy decomposition of a column-stochastic matrix (rows = outcomes) into
/// deterministic maps. Ties in the per-column argmax go to the lowest row.
inline std::vector<StochasticTerm> decompose_stochastic(const RMatrix& p) {
  const int o = static_cast<int>(p.rows());
  const int cols = static_cast<int>(p.cols());
  if (o < 1 || cols < 1) throw InvalidArgument("decompose_stochastic: empty matrix");
  for (int z = 0; z < cols; ++z) {
    if (p.col(z).minCoeff() < -1e-12) throw InvalidArgument("decompose_stochastic: negative entry in column " + std::to_string(z));
    if (std::abs(p.col(z).sum() - 1.0) > 1e-10) {
      throw InvalidArgument("decompose_stochastic: column " + std::to_string(z) + " does not sum to 1");
    }
  }
  RMatrix r = p.cwiseMax(0.0);
  std::vector<StochasticTerm> out;
  double remaining = 1.0;
  const int cap = o * cols;
  while (remaining > 1e-13 && static_cast<int>(out.size()) < cap) {
    StochasticTerm t;
    t.choice.resize(static_cast<std::size_t>(cols));
    double w = std::numeric_limits<double>::infinity();
    for (int z = 0; z < cols; ++z) {
      int best = 0;
      for (int a = 1; a < o; ++a) {
        if (r(a, z) > r(best, z)) best = a;
      }
      t.choice[static_cast<std::size_t>(z)] = best;
      w = std::min(w, r(best, z));
    }
    if (w <= 0.0) break;
    // The last term absorbs rounding so the weights sum to exactly one.
    t.weight = std::min(w, remaining);
    for (int z = 0; z < cols; ++z) r(t.choice[static_cast<std::size_t>(z)], z) -= w;
    remaining -= t.weight;
    out.push_back(std::move(t));
  }
  if (!out.empty() && remaining > 0.0) out.back().weight += remaining;
  return out;
}

/// q(1) = q(2) = ½; device λ answers a = k for its own setting and uniformly
/// otherwise. Reproduces Φ_{1/2} of both basis measurements.
inline ClassicalModel pair_half_noise_model(const UnitaryMatrix& f, const UnitaryMatrix& h) {
  if (f.dim() != h.dim()) throw StructuralError("pair_half_noise_model: dimension mismatch");
  const int d = f.dim();
  ClassicalModel m;
  m.dim = d;
  m.settings = 2;
  m.outcomes = d;
  m.v = 0.5;
  m.bases = {f, h};
  m.weights = {0.5, 0.5};
  for (int l = 0; l < 2; ++l) {
    std::vector<double> resp(static_cast<std::size_t>(2 * d * d), 0.0);
    for (int x = 0; x < 2; ++x) {
      for (int k = 0; k < d; ++k) {
        for (int a = 0; a < d; ++a) {
          resp[m.slot(a, x, k)] = x == l ? (a == k ? 0.5 : 0.0) : 0.5 / d;
        }
      }
    }
    m.response.push_back(std::move(resp));
  }
  return m;
}

/// Unitary U₁ ⊕ U₂.
inline UnitaryMatrix direct_sum_unitary(const UnitaryMatrix& a, const UnitaryMatrix& b) {
  return UnitaryMatrix(direct_sum(a.matrix(), b.matrix()));
}

namespace detail {

/// True when the two bases define the same set of rank-1 projectors.
inline bool same_basis(const UnitaryMatrix& u, const UnitaryMatrix& w, double tol = 1e-9) {
  const RMatrix overlap = (u.matrix().adjoint() * w.matrix()).cwiseAbs2();
  for (Eigen::Index i = 0; i < overlap.rows(); ++i) {
    if (overlap.row(i).maxCoeff() < 1.0 - tol) return false;
  }
  return true;
}

}  // namespace detail

/// Eigenbases of every rank-1 element of the set, without repeats.
inline std::vector<UnitaryMatrix> eigenbases(const MeasurementSet& m) {
  std::vector<UnitaryMatrix> out;
  for (int x = 0; x < m.settings(); ++x) {
    for (int a = 0; a < m.outcomes(); ++a) {
      if (m.is_zero(x, a)) continue;
      const auto e = eig_hermitian(m(x, a));
      const double top = e.values(e.values.size() - 1);
      if (e.values.size() > 1 && e.values(e.values.size() - 2) > 1e-9 * std::max(1.0, top)) continue;
      UnitaryMatrix u(e.vectors);
      bool seen = false;
      for (const auto& w : out) seen = seen || detail::same_basis(u, w);
      if (!seen) out.push_back(std::move(u));
    }
  }
  return out;
}

/// Default ensemble: eigenbases of the rank-1 elements followed by n_haar
/// Haar-random unitaries drawn from the "ensemble" stream of `seed`.
inline std::vector<UnitaryMatrix> default_ensemble(const MeasurementSet& m, int n_haar, std::uint64_t seed) {
  if (n_haar < 0) throw InvalidArgument("ensemble size must be >= 0");
  auto out = eigenbases(m);
  Rng rng = make_stream(seed, "ensemble");
  for (int i = 0; i < n_haar; ++i) out.push_back(haar_unitary(m.dim(), rng));
  if (out.empty()) out.push_back(UnitaryMatrix::identity(m.dim()));
  return out;
}

struct SearchOptions {
  double tol = 1e-9;            // pricing and LP tolerance
  int columns_per_round = 64;   // new columns added per pricing pass
  int max_rounds = 100000;
};

struct SearchResult {
  double v_star = 0.0;
  ClassicalModel model;
  double gap = 0.0;        // certified bound on (ensemble optimum − v_star)
  double residual = 0.0;   // reconstruction residual of the model
  int rounds = 0;
  int columns = 0;
  long pivots = 0;
};

/// Best visibility v for which Φ_v(M) has a classical model whose devices are
/// the given bases. Solved by column generation over deterministic strategies:
/// for fixed λ the responses q̃(·,λ|x,k)/q(λ) form a polytope whose vertices
/// are deterministic strategies, and the pricing problem separates over (x,k).
inline SearchResult search_classical_model(const MeasurementSet& m, const std::vector<UnitaryMatrix>& unitaries,
                                           SearchOptions opt = {}) {
  if (unitaries.empty()) throw InvalidArgument("search_classical_model: empty unitary ensemble");
  const int d = m.dim();
  const int n = m.settings();
  const int o = m.outcomes();
  const int nl = static_cast<int>(unitaries.size());
  for (const auto& u : unitaries) {
    if (u.dim() != d) throw StructuralError("search_classical_model: unitary dimension does not match the set");
  }
  const HermitianBasis basis(d);
  const int d2 = d * d;
  const int om = o - 1;  // the last outcome's rows follow from completeness
  const int nrow_ops = n * om * d2;
  const int conv_row = nrow_ops;
  const int cap_row = nrow_ops + 1;
  const int m_rows = nrow_ops + 2;
  auto op_row = [&](int x, int a, int i) { return (x * om + a) * d2 + i; };

  // coef[λ·d + k] = HermitianBasis coefficients of E_{k|λ}.
  RMatrix coef(static_cast<Eigen::Index>(nl) * d, d2);
  for (int l = 0; l < nl; ++l) {
    for (int k = 0; k < d; ++k) {
      coef.row(static_cast<Eigen::Index>(l) * d + k) = basis.coefficients(unitaries[static_cast<std::size_t>(l)].projector(k)).transpose();
    }
  }

  std::vector<double> rhs(static_cast<std::size_t>(m_rows), 0.0);
  SimplexSolver::Column v_col;
  for (int x = 0; x < n; ++x) {
    for (int a = 0; a < om; ++a) {
      const double tr = m(x, a).trace().real();
      const RVector noise = basis.coefficients(CMatrix::Identity(d, d) * (tr / d));
      const RVector signal = basis.coefficients(m(x, a)) - noise;
      for (int i = 0; i < d2; ++i) {
        rhs[static_cast<std::size_t>(op_row(x, a, i))] = noise(i);
        if (signal(i) != 0.0) v_col.emplace_back(op_row(x, a, i), -signal(i));
      }
    }
  }
  rhs[static_cast<std::size_t>(conv_row)] = 1.0;
  rhs[static_cast<std::size_t>(cap_row)] = 1.0;
  v_col.emplace_back(cap_row, 1.0);

  LpOptions lpo;
  SimplexSolver lp(m_rows, rhs, lpo);
  lp.add_column(-1.0, v_col);               // v (internal minimization of −v)
  lp.add_column(0.0, {{cap_row, 1.0}});     // slack s, v + s = 1

  struct ColumnInfo {
    int lambda;
    std::vector<int> table;  // γ(x, k) at x·d + k
  };
  std::vector<ColumnInfo> info;

  auto add_strategy = [&](int l, const std::vector<int>& table) {
    SimplexSolver::Column col;
    RMatrix acc = RMatrix::Zero(n * om, d2);
    for (int x = 0; x < n; ++x) {
      for (int k = 0; k < d; ++k) {
        const int a = table[static_cast<std::size_t>(x * d + k)];
        if (a < om) acc.row(x * om + a) += coef.row(static_cast<Eigen::Index>(l) * d + k);
      }
    }
    for (int r = 0; r < n * om; ++r) {
      for (int i = 0; i < d2; ++i) {
        if (std::abs(acc(r, i)) > 1e-15) col.emplace_back(r * d2 + i, acc(r, i));
      }
    }
    col.emplace_back(conv_row, 1.0);
    lp.add_column(0.0, col);
    info.push_back({l, table});
  };

  // Start columns: constant-in-k strategies on device 0 mixing to Tr(M)/d·𝟙,
  // which makes v = 0 feasible.
  {
    RMatrix p(o, n);
    for (int x = 0; x < n; ++x) {
      for (int a = 0; a < o; ++a) p(a, x) = std::max(0.0, m(x, a).trace().real() / d);
      p.col(x) /= p.col(x).sum();
    }
    for (const auto& t : decompose_stochastic(p)) {
      std::vector<int> table(static_cast<std::size_t>(n * d));
      for (int x = 0; x < n; ++x) {
        for (int k = 0; k < d; ++k) table[static_cast<std::size_t>(x * d + k)] = t.choice[static_cast<std::size_t>(x)];
      }
      add_strategy(0, table);
    }
  }

  SearchResult res;
  double last_rc = 0.0;
  for (res.rounds = 1; res.rounds <= opt.max_rounds; ++res.rounds) {
    const SolverStatus st = lp.solve();
    if (st == SolverStatus::infeasible) {
      throw SolverError("search_classical_model: master LP infeasible although v = 0 is always feasible");
    }
    if (st != SolverStatus::optimal) {
      throw SolverError(std::string("search_classical_model: master LP ") + to_string(st));
    }
    // Duals of the internal minimization: reduced cost of a column is
    // 0 − aᵀy, and we look for negative values.
    const std::vector<double> y = lp.dual();
    RMatrix ymat(d2, std::max(1, n * om));
    ymat.setZero();
    for (int x = 0; x < n; ++x) {
      for (int a = 0; a < om; ++a) {
        for (int i = 0; i < d2; ++i) ymat(i, x * om + a) = y[static_cast<std::size_t>(op_row(x, a, i))];
      }
    }
    const RMatrix t = coef * ymat;  // t(λd + k, x·om + a) = ⟨Y_ax, E_{k|λ}⟩
    const double yc = y[static_cast<std::size_t>(conv_row)];

    std::vector<std::pair<double, int>> candidates;
    std::vector<std::vector<int>> tables(static_cast<std::size_t>(nl));
    for (int l = 0; l < nl; ++l) {
      std::vector<int> table(static_cast<std::size_t>(n * d));
      double s = 0.0;
      for (int x = 0; x < n; ++x) {
        for (int k = 0; k < d; ++k) {
          // The dropped last outcome contributes 0; ties go to the lowest index.
          int best = 0;
          double best_val = -std::numeric_limits<double>::infinity();
          for (int a = 0; a < o; ++a) {
            const double val = a < om ? t(static_cast<Eigen::Index>(l) * d + k, x * om + a) : 0.0;
            if (val > best_val + 1e-15) {
              best_val = val;
              best = a;
            }
          }
          table[static_cast<std::size_t>(x * d + k)] = best;
          s += best_val;
        }
      }
      const double rc = -(s + yc);  // reduced cost in the internal minimization
      tables[static_cast<std::size_t>(l)] = std::move(table);
      if (rc < -opt.tol) candidates.emplace_back(rc, l);
    }
    last_rc = 0.0;
    for (const auto& c : candidates) last_rc = std::min(last_rc, c.first);
    if (candidates.empty()) break;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(opt.columns_per_round));
    for (std::size_t c = 0; c < take; ++c) {
      add_strategy(candidates[c].second, tables[static_cast<std::size_t>(candidates[c].second)]);
    }
  }
  if (res.rounds > opt.max_rounds) throw SolverError("search_classical_model: column generation did not converge");

  const std::vector<double> w = lp.primal();
  const double v = std::clamp(w[0], 0.0, 1.0);
  // Every column has weight at most 1 (convexity row), so the ensemble
  // optimum exceeds the master value by at most the most negative reduced cost.
  res.gap = std::max(0.0, -last_rc) + lp.dual_infeasibility();
  res.v_star = v;
  res.pivots = lp.pivots();
  res.columns = static_cast<int>(info.size());

  ClassicalModel model;
  model.dim = d;
  model.settings = n;
  model.outcomes = o;
  model.v = v;
  std::map<int, std::size_t> device_slot;
  std::vector<double> weights;
  std::vector<std::vector<double>> resp;
  for (std::size_t c = 0; c < info.size(); ++c) {
    const double wc = w[c + 2];
    if (wc <= 0.0) continue;
    const int l = info[c].lambda;
    auto it = device_slot.find(l);
    if (it == device_slot.end()) {
      it = device_slot.emplace(l, weights.size()).first;
      weights.push_back(0.0);
      resp.emplace_back(static_cast<std::size_t>(n * d * o), 0.0);
    }
    weights[it->second] += wc;
    for (int x = 0; x < n; ++x) {
      for (int k = 0; k < d; ++k) resp[it->second][model.slot(info[c].table[static_cast<std::size_t>(x * d + k)], x, k)] += wc;
    }
  }
  // Devices in ensemble order; tiny weights pruned and the rest renormalized.
  double kept = 0.0;
  for (const auto& [l, s] : device_slot) {
    if (weights[s] < kWeightPrune) continue;
    kept += weights[s];
  }
  for (const auto& [l, s] : device_slot) {
    if (weights[s] < kWeightPrune) continue;
    model.bases.push_back(unitaries[static_cast<std::size_t>(l)]);
    model.weights.push_back(weights[s] / kept);
    std::vector<double> r = resp[s];
    for (double& e : r) e /= kept;
    model.response.push_back(std::move(r));
  }
  res.model = std::move(model);
  res.residual = reconstruct(res.model, m);
  return res;
}

/// The full LP over variables v, s, q(λ) and q̃(a,λ|x,k), with the operator
/// equalities flattened over a HermitianBasis (d² rows per (a,x)). Variable
/// layout: 0 = v, 1 = s, 2..2+N_λ = q(λ), then q̃ in (λ, x, k, a) order.
inline LinearProgram full_model_lp(const MeasurementSet& m, const std::vector<UnitaryMatrix>& unitaries) {
  if (unitaries.empty()) throw InvalidArgument("full_model_lp: empty unitary ensemble");
  const int d = m.dim();
  const int n = m.settings();
  const int o = m.outcomes();
  const int nl = static_cast<int>(unitaries.size());
  const HermitianBasis basis(d);
  const int d2 = d * d;
  LinearProgram p(2 + nl + nl * n * d * o);
  p.objective[0] = 1.0;
  auto qt = [&](int l, int x, int k, int a) { return 2 + nl + ((l * n + x) * d + k) * o + a; };
  std::vector<RMatrix> coef(static_cast<std::size_t>(nl));
  for (int l = 0; l < nl; ++l) {
    coef[static_cast<std::size_t>(l)].resize(d, d2);
    for (int k = 0; k < d; ++k) {
      coef[static_cast<std::size_t>(l)].row(k) = basis.coefficients(unitaries[static_cast<std::size_t>(l)].projector(k)).transpose();
    }
  }
  for (int x = 0; x < n; ++x) {
    for (int a = 0; a < o; ++a) {
      const double tr = m(x, a).trace().real();
      const RVector noise = basis.coefficients(CMatrix::Identity(d, d) * (tr / d));
      const RVector signal = basis.coefficients(m(x, a)) - noise;
      for (int i = 0; i < d2; ++i) {
        std::vector<std::pair<int, double>> row;
        if (signal(i) != 0.0) row.emplace_back(0, -signal(i));
        for (int l = 0; l < nl; ++l) {
          for (int k = 0; k < d; ++k) {
            const double c = coef[static_cast<std::size_t>(l)](k, i);
            if (c != 0.0) row.emplace_back(qt(l, x, k, a), c);
          }
        }
        p.add_row(std::move(row), noise(i));
      }
    }
  }
  for (int l = 0; l < nl; ++l) {
    for (int x = 0; x < n; ++x) {
      for (int k = 0; k < d; ++k) {
        std::vector<std::pair<int, double>> row{{2 + l, -1.0}};
        for (int a = 0; a < o; ++a) row.emplace_back(qt(l, x, k, a), 1.0);
        p.add_row(std::move(row), 0.0);
      }
    }
  }
  std::vector<std::pair<int, double>> norm;
  for (int l = 0; l < nl; ++l) norm.emplace_back(2 + l, 1.0);
  p.add_row(std::move(norm), 1.0);
  p.add_row({{0, 1.0}, {1, 1.0}}, 1.0);
  return p;
}

/// Builds the model from a solution of full_model_lp.
inline ClassicalModel model_from_full_lp(const MeasurementSet& m, const std::vector<UnitaryMatrix>& unitaries,
                                            const std::vector<double>& x) {
  const int d = m.dim();
  const int n = m.settings();
  const int o = m.outcomes();
  const int nl = static_cast<int>(unitaries.size());
  ClassicalModel model;
  model.dim = d;
  model.settings = n;
  model.outcomes = o;
  model.v = std::clamp(x[0], 0.0, 1.0);
  for (int l = 0; l < nl; ++l) {
    const double q = x[static_cast<std::size_t>(2 + l)];
    if (q < kWeightPrune) continue;
    model.bases.push_back(unitaries[static_cast<std::size_t>(l)]);
    model.weights.push_back(q);
    std::vector<double> r(static_cast<std::size_t>(n * d * o));
    for (int xs = 0; xs < n; ++xs) {
      for (int k = 0; k < d; ++k) {
        for (int a = 0; a < o; ++a) {
          r[model.slot(a, xs, k)] = std::max(0.0, x[static_cast<std::size_t>(2 + nl + ((l * n + xs) * d + k) * o + a)]);
        }
      }
    }
    model.response.push_back(std::move(r));
  }
  return model;
}

/// Replaces stochastic post-processing by mixtures of deterministic
/// strategies: F_{a|x,(γ,λ)} = Σ_k δ_{a,γ(x,k)} E_{k|λ} with weight q(λ)q(γ|λ).
inline ProjectiveCommutingModel eliminate_postprocessing(const ClassicalModel& model) {
  const int d = model.dim;
  const int n = model.settings;
  const int o = model.outcomes;
  ProjectiveCommutingModel out;
  out.dim = d;
  out.settings = n;
  out.outcomes = o;
  for (int l = 0; l < model.devices(); ++l) {
    const double q = model.weights[static_cast<std::size_t>(l)];
    if (q <= kWeightPrune) continue;
    RMatrix p(o, n * d);
    for (int x = 0; x < n; ++x) {
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int a = 0; a < o; ++a) {
          p(a, x * d + k) = std::max(0.0, model.q(a, l, x, k)) / q;
          s += p(a, x * d + k);
        }
        p.col(x * d + k) /= s;
      }
    }
    const auto& u = model.bases[static_cast<std::size_t>(l)];
    std::vector<CMatrix> e;
    for (int k = 0; k < d; ++k) e.push_back(u.projector(k));
    for (const auto& t : decompose_stochastic(p)) {
      std::vector<std::vector<CMatrix>> fam(static_cast<std::size_t>(n),
                                            std::vector<CMatrix>(static_cast<std::size_t>(o), CMatrix::Zero(d, d)));
      for (int x = 0; x < n; ++x) {
        for (int k = 0; k < d; ++k) {
          fam[static_cast<std::size_t>(x)][static_cast<std::size_t>(t.choice[static_cast<std::size_t>(x * d + k)])] +=
              e[static_cast<std::size_t>(k)];
        }
      }
      out.weights.push_back(q * t.weight);
      out.projectors.push_back(std::move(fam));
    }
  }
  return out;
}

/// Restricts a model of the direct-sum POVM |a⟩⟨a| ⊕ M̃_a (dimension o + d)
/// to the last d coordinates. Weights are kept as they are.
inline ProjectiveCommutingModel project_extended_model(const ProjectiveCommutingModel& model, int o, int d) {
  if (model.dim != o + d) throw StructuralError("project_extended_model: model dimension is not o + d");
  for (int x = 0; x < model.settings; ++x) {
    for (int a = 0; a < model.outcomes; ++a) {
      const CMatrix r = model.reconstructed(x, a);
      const double off = max_abs(r.topRightCorner(o, d));
      if (off > 1e-6) {
        throw StructuralError("project_extended_model: reconstructed operator couples the two blocks (" +
                              format_sig(off, 3) + ")");
      }
    }
  }
  ProjectiveCommutingModel out;
  out.dim = d;
  out.settings = model.settings;
  out.outcomes = model.outcomes;
  out.weights = model.weights;
  for (const auto& fam : model.projectors) {
    std::vector<std::vector<CMatrix>> f;
    for (const auto& setting : fam) {
      std::vector<CMatrix> row;
      for (const auto& op : setting) row.push_back(op.bottomRightCorner(d, d));
      f.push_back(std::move(row));
    }
    out.projectors.push_back(std::move(f));
  }
  const auto r = out.residuals();
  if (r.projectivity > 1e-6 || r.completeness > 1e-6) {
    throw StructuralError("project_extended_model: projected operators are not projective; the devices of the "
                          "extended model must not mix the two blocks");
  }
  return out;
}

}  // namespace classim
