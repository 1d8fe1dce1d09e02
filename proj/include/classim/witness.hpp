#pragma once

// Linear witnesses W = Σ c_{azx} Tr(ρ_z M_{a|x}) and their classical bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "classim/errors.hpp"
#include "classim/linalg.hpp"
#include "classim/measurements.hpp"
#include "classim/parallel.hpp"
#include "classim/sdp.hpp"
#include "classim/strategy.hpp"

namespace classim {

inline constexpr double kStrategyGuard = 1e6;
inline constexpr double kQubitStrategyGuard = 1e9;

/// Coefficients c[a][z][x] together with the probe states ρ_z.
class WitnessSpec {
 public:
  WitnessSpec(int outcomes, int settings, StateEnsemble ensemble)
      : o_(outcomes), n_(settings), ensemble_(std::move(ensemble)),
        c_(static_cast<std::size_t>(outcomes) * static_cast<std::size_t>(ensemble_.size()) *
               static_cast<std::size_t>(settings),
           0.0) {
    if (outcomes < 1 || settings < 1) throw InvalidArgument("witness: outcomes and settings must be positive");
  }

  int outcomes() const { return o_; }
  int settings() const { return n_; }
  int states() const { return ensemble_.size(); }
  int dim() const { return ensemble_.dim(); }
  const StateEnsemble& ensemble() const { return ensemble_; }

  double c(int a, int z, int x) const { return c_[index(a, z, x)]; }
  void set(int a, int z, int x, double value) {
    if (!std::isfinite(value)) throw StructuralError("witness: non-finite coefficient");
    c_[index(a, z, x)] = value;
  }

  void check_against(const MeasurementSet& m) const {
    if (m.dim() != dim() || m.settings() != n_ || m.outcomes() != o_) {
      throw StructuralError("witness: spec is " + shape(dim(), n_, o_) + " but the measurement set is " +
                            shape(m.dim(), m.settings(), m.outcomes()));
    }
  }

 private:
  std::size_t index(int a, int z, int x) const {
    if (a < 0 || a >= o_ || z < 0 || z >= states() || x < 0 || x >= n_) {
      throw StructuralError("witness: coefficient index (" + std::to_string(a) + ", " + std::to_string(z) + ", " +
                            std::to_string(x) + ") out of range");
    }
    return (static_cast<std::size_t>(a) * static_cast<std::size_t>(states()) + static_cast<std::size_t>(z)) *
               static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(x);
  }
  static std::string shape(int d, int n, int o) {
    return "(d=" + std::to_string(d) + ", n=" + std::to_string(n) + ", o=" + std::to_string(o) + ")";
  }

  int o_, n_;
  StateEnsemble ensemble_;
  std::vector<double> c_;
};

/// O_{ax} = Σ_z c_{azx} ρ_z.
class ScoreOperators {
 public:
  ScoreOperators(int dim, int settings, int outcomes)
      : d_(dim), n_(settings), o_(outcomes),
        ops_(static_cast<std::size_t>(settings) * static_cast<std::size_t>(outcomes), CMatrix::Zero(dim, dim)) {}

  int dim() const { return d_; }
  int settings() const { return n_; }
  int outcomes() const { return o_; }

  const CMatrix& operator()(int a, int x) const { return ops_[static_cast<std::size_t>(x * o_ + a)]; }
  void set(int a, int x, const CMatrix& op) {
    if (op.rows() != d_ || op.cols() != d_) throw StructuralError("score operator has the wrong dimension");
    if (hermiticity_residual(op) > 1e-10) {
      throw StructuralError("score operator (a=" + std::to_string(a) + ", x=" + std::to_string(x) +
                            ") is not Hermitian");
    }
    ops_[static_cast<std::size_t>(x * o_ + a)] = 0.5 * (op + op.adjoint());
  }

  /// C_k = Σ_x O_{γ(x,k), x}.
  CMatrix strategy_operator(const DeterministicStrategy& g, int k) const {
    CMatrix c = CMatrix::Zero(d_, d_);
    for (int x = 0; x < n_; ++x) c += (*this)(g(x, k), x);
    return c;
  }

 private:
  int d_, n_, o_;
  std::vector<CMatrix> ops_;
};

inline ScoreOperators score_operators(const WitnessSpec& spec) {
  ScoreOperators ops(spec.dim(), spec.settings(), spec.outcomes());
  for (int x = 0; x < spec.settings(); ++x) {
    for (int a = 0; a < spec.outcomes(); ++a) {
      CMatrix o = CMatrix::Zero(spec.dim(), spec.dim());
      for (int z = 0; z < spec.states(); ++z) {
        const double c = spec.c(a, z, x);
        if (c != 0.0) o += c * spec.ensemble()[z];
      }
      ops.set(a, x, o);
    }
  }
  return ops;
}

inline double witness_value(const WitnessSpec& spec, const MeasurementSet& m) {
  spec.check_against(m);
  Complex w = 0.0;
  for (int x = 0; x < m.settings(); ++x) {
    for (int a = 0; a < m.outcomes(); ++a) {
      for (int z = 0; z < spec.states(); ++z) {
        const double c = spec.c(a, z, x);
        if (c != 0.0) w += c * (spec.ensemble()[z] * m(x, a)).trace();
      }
    }
  }
  if (std::abs(w.imag()) > 1e-10 * std::max(1.0, std::abs(w.real()))) {
    throw StructuralError("witness value has an imaginary part");
  }
  return w.real();
}

/// c_{azx} = δ_{z, x·o+a} with ρ_z from discrimination_ensemble. Padded
/// elements keep a zero coefficient.
inline WitnessSpec state_discrimination_spec(const MeasurementSet& m) {
  WitnessSpec spec(m.outcomes(), m.settings(), discrimination_ensemble(m));
  for (int x = 0; x < m.settings(); ++x) {
    for (int a = 0; a < m.outcomes(); ++a) {
      if (!m.is_zero(x, a)) spec.set(a, x * m.outcomes() + a, x, 1.0);
    }
  }
  return spec;
}

/// Outcome of a maximization over deterministic strategies.
struct BetaBound {
  double beta = 0.0;
  DeterministicStrategy strategy{1, 1, 1};
  std::uint64_t strategies = 0;  // o^(n·d)
  std::uint64_t distinct = 0;    // objectives actually evaluated
  std::uint64_t covered = 0;     // strategies represented by the distinct ones
  bool exact = false;
};

namespace detail {

using Matrix2c = Eigen::Matrix2cd;

inline std::vector<long long> round_key(const CMatrix& m) {
  std::vector<long long> key;
  key.reserve(static_cast<std::size_t>(2 * m.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      key.push_back(std::llround(m(i, j).real() * 1e12));
      key.push_back(std::llround(m(i, j).imag() * 1e12));
    }
  }
  return key;
}

inline std::uint64_t checked_count(const ScoreOperators& ops, double guard) {
  const std::uint64_t count = strategy_count(ops.settings(), ops.dim(), ops.outcomes());
  if (count == 0 || static_cast<double>(count) > guard) {
    const double log10 = ops.settings() * ops.dim() * std::log10(static_cast<double>(ops.outcomes()));
    throw GuardError("strategy count " + std::to_string(ops.outcomes()) + "^(" + std::to_string(ops.settings()) +
                     "*" + std::to_string(ops.dim()) + ") ~ 1e" + std::to_string(static_cast<int>(log10)) +
                     " exceeds the enumeration limit of " + std::to_string(static_cast<long long>(guard)));
  }
  return count;
}

inline bool better(double value, std::uint64_t index, double best, std::uint64_t best_index) {
  if (value > best + 1e-12) return true;
  return value >= best - 1e-12 && index < best_index;
}

}  // namespace detail

/// Exact bound for d = 2: max_γ Tr O₊ + √(Tr(O₋)² − 4 det O₋).
inline BetaBound qubit_beta(const ScoreOperators& ops) {
  if (ops.dim() != 2) throw InvalidArgument("qubit_beta requires d = 2, got d = " + std::to_string(ops.dim()));
  const int n = ops.settings();
  const int o = ops.outcomes();
  BetaBound out;
  out.strategies = detail::checked_count(ops, kQubitStrategyGuard);
  out.exact = true;

  struct Pair {
    detail::Matrix2c plus, minus;  // O_{a1,x} ± O_{a2,x}
    std::uint64_t digits;          // a1 + a2·o
    std::uint64_t multiplicity;
  };
  std::vector<std::vector<Pair>> pairs(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) {
    std::map<std::vector<long long>, std::size_t> seen;
    for (int c = 0; c < o * o; ++c) {
      const int a1 = c % o, a2 = c / o;
      const detail::Matrix2c p = ops(a1, x) + ops(a2, x);
      const detail::Matrix2c m = ops(a1, x) - ops(a2, x);
      CMatrix key(2, 4);
      key << p, m;
      const auto [it, fresh] = seen.emplace(detail::round_key(key), pairs[static_cast<std::size_t>(x)].size());
      if (fresh) {
        pairs[static_cast<std::size_t>(x)].push_back({p, m, static_cast<std::uint64_t>(c), 1});
      } else {
        ++pairs[static_cast<std::size_t>(x)][it->second].multiplicity;
      }
    }
  }

  std::uint64_t total = 1;
  std::vector<std::uint64_t> place(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) total *= pairs[static_cast<std::size_t>(x)].size();
  for (int x = 0; x < n; ++x) {
    place[static_cast<std::size_t>(x)] = 1;
    for (int y = 0; y < x; ++y) place[static_cast<std::size_t>(x)] *= static_cast<std::uint64_t>(o) * o;
  }

  const std::size_t chunks = 64;
  std::vector<double> best(chunks, -std::numeric_limits<double>::infinity());
  std::vector<std::uint64_t> best_index(chunks, UINT64_MAX);
  std::vector<std::uint64_t> covered(chunks, 0);
  parallel_chunks(total, chunks, [&](std::size_t ch, std::size_t b, std::size_t e) {
    std::vector<std::size_t> digit(static_cast<std::size_t>(n));
    for (std::size_t t = b; t < e; ++t) {
      std::size_t rest = t;
      detail::Matrix2c plus = detail::Matrix2c::Zero(), minus = detail::Matrix2c::Zero();
      std::uint64_t index = 0, mult = 1;
      for (int x = 0; x < n; ++x) {
        const auto& list = pairs[static_cast<std::size_t>(x)];
        const Pair& p = list[rest % list.size()];
        rest /= list.size();
        plus += p.plus;
        minus += p.minus;
        index += p.digits * place[static_cast<std::size_t>(x)];
        mult *= p.multiplicity;
      }
      plus *= 0.5;
      minus *= 0.5;
      const double tr_minus = minus.trace().real();
      const double det_minus = minus.determinant().real();
      const double disc = std::max(0.0, tr_minus * tr_minus - 4.0 * det_minus);
      const double value = plus.trace().real() + std::sqrt(disc);
      covered[ch] += mult;
      if (detail::better(value, index, best[ch], best_index[ch])) {
        best[ch] = value;
        best_index[ch] = index;
      }
    }
  });
  double beta = -std::numeric_limits<double>::infinity();
  std::uint64_t arg = UINT64_MAX;
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    out.covered += covered[ch];
    if (best_index[ch] != UINT64_MAX && detail::better(best[ch], best_index[ch], beta, arg)) {
      beta = best[ch];
      arg = best_index[ch];
    }
  }
  out.beta = beta;
  out.distinct = total;
  out.strategy = DeterministicStrategy::from_index(arg, n, 2, o);
  return out;
}

/// Per-strategy relaxation value: primal optimum and the certified upper
/// bound Tr Y + Σ_k λ_max(C_k − Y) built from the dual solution.
struct StrategyBound {
  double value = 0.0;
  double primal = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

namespace detail {

/// max Σ_k Tr(C_k N_k) s.t. N_k ⪰ 0, Tr N_k = 1, Σ_k N_k = 𝟙.
inline StrategyBound relaxation_bound(const std::vector<CMatrix>& c, double tol) {
  const int d = static_cast<int>(c.size());
  const HermitianBasis basis(d);
  SemidefiniteProgram p;
  for (int k = 0; k < d; ++k) {
    p.add_block(2 * d);
    p.objective[static_cast<std::size_t>(k)] = complex_term(c[static_cast<std::size_t>(k)]);
  }
  const RMatrix id_term = complex_term(CMatrix::Identity(d, d));
  for (int k = 0; k < d; ++k) p.constraints.push_back({{{k, id_term}}, 1.0});
  // The last diagonal unit is implied by the trace rows.
  std::vector<int> kept;
  for (int i = 0; i < basis.size(); ++i) {
    if (i == d - 1) continue;
    kept.push_back(i);
    SdpConstraint row;
    const RMatrix t = complex_term(basis.element(i));
    for (int k = 0; k < d; ++k) row.terms.push_back({k, t});
    row.rhs = basis.trace_of(i);
    p.constraints.push_back(std::move(row));
  }
  const auto sol = solve_sdp(p, tol);
  if (!sol.optimal()) {
    throw SolverError(std::string("strategy relaxation: ") + to_string(sol.status) + " (" + sol.message + ")");
  }
  CMatrix y = CMatrix::Zero(d, d);
  for (std::size_t j = 0; j < kept.size(); ++j) y += sol.y[static_cast<std::size_t>(d) + j] * basis.element(kept[j]);
  double bound = y.trace().real();
  for (int k = 0; k < d; ++k) bound += max_eigenvalue(c[static_cast<std::size_t>(k)] - y);
  StrategyBound out;
  out.primal = sol.objective;
  out.value = std::max(bound, sol.objective);
  out.gap = out.value - sol.objective;
  out.iterations = sol.iterations;
  if (out.gap > 1e-6) throw SolverError("strategy relaxation: certified gap " + std::to_string(out.gap));
  return out;
}

}  // namespace detail

inline StrategyBound sdp_strategy_bound(const ScoreOperators& ops, const DeterministicStrategy& g, double tol = 1e-8) {
  if (g.settings() != ops.settings() || g.device_outcomes() != ops.dim() || g.outcomes() != ops.outcomes()) {
    throw StructuralError("strategy shape does not match the score operators");
  }
  std::vector<CMatrix> c;
  for (int k = 0; k < ops.dim(); ++k) c.push_back(ops.strategy_operator(g, k));
  return detail::relaxation_bound(c, tol);
}

struct BetaOptions {
  bool force_sdp = false;
  double tol = 1e-8;
};

/// Classical bound β: exact for d = 2, maximal relaxation value otherwise.
/// The relaxation value only depends on the multiset {C_k}, so strategies are
/// grouped by the columns k ↦ (γ(x,k))_x up to equal C_k.
inline BetaBound beta_upper(const ScoreOperators& ops, BetaOptions opt = {}) {
  if (ops.dim() == 2 && !opt.force_sdp) return qubit_beta(ops);
  const int d = ops.dim(), n = ops.settings(), o = ops.outcomes();
  BetaBound out;
  out.strategies = detail::checked_count(ops, kStrategyGuard);

  // Columns are tuples t ∈ o^n with t_x = γ(x, k).
  const std::uint64_t tuples = strategy_count(n, 1, o);
  std::map<std::vector<long long>, int> ids;
  std::vector<std::uint64_t> representative;
  std::vector<std::uint64_t> class_size;
  std::vector<CMatrix> column_op;
  for (std::uint64_t t = 0; t < tuples; ++t) {
    const auto col = DeterministicStrategy::from_index(t, n, 1, o);
    const CMatrix c = ops.strategy_operator(col, 0);
    const auto [it, fresh] = ids.emplace(detail::round_key(c), static_cast<int>(representative.size()));
    if (fresh) {
      representative.push_back(t);
      class_size.push_back(1);
      column_op.push_back(c);
    } else {
      ++class_size[static_cast<std::size_t>(it->second)];
    }
  }
  const int m = static_cast<int>(representative.size());

  // Multisets of size d over the column classes, as non-decreasing id lists.
  std::vector<std::vector<int>> multisets;
  std::vector<int> cur(static_cast<std::size_t>(d), 0);
  while (true) {
    multisets.push_back(cur);
    int pos = d - 1;
    while (pos >= 0 && cur[static_cast<std::size_t>(pos)] == m - 1) --pos;
    if (pos < 0) break;
    const int v = cur[static_cast<std::size_t>(pos)] + 1;
    for (int q = pos; q < d; ++q) cur[static_cast<std::size_t>(q)] = v;
  }

  std::vector<double> factorial(static_cast<std::size_t>(d) + 1, 1.0);
  for (int i = 1; i <= d; ++i) factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i) - 1] * i;

  std::vector<double> values(multisets.size());
  parallel_chunks(multisets.size(), std::max<std::size_t>(1, multisets.size()), [&](std::size_t, std::size_t b,
                                                                                   std::size_t e) {
    for (std::size_t s = b; s < e; ++s) {
      std::vector<CMatrix> c;
      for (int id : multisets[s]) c.push_back(column_op[static_cast<std::size_t>(id)]);
      values[s] = detail::relaxation_bound(c, opt.tol).value;
    }
  });

  double beta = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t s = 0; s < multisets.size(); ++s) {
    if (values[s] > beta + 1e-12) {
      beta = values[s];
      arg = s;
    }
    // Number of strategies in this group: d!/Π m_i! · Π |class_i|^{m_i}.
    double count = factorial[static_cast<std::size_t>(d)];
    const auto& ms = multisets[s];
    for (std::size_t i = 0; i < ms.size();) {
      std::size_t j = i;
      while (j < ms.size() && ms[j] == ms[i]) ++j;
      count /= factorial[j - i];
      count *= std::pow(static_cast<double>(class_size[static_cast<std::size_t>(ms[i])]), static_cast<double>(j - i));
      i = j;
    }
    out.covered += static_cast<std::uint64_t>(std::llround(count));
  }
  DeterministicStrategy g(n, d, o);
  for (int k = 0; k < d; ++k) {
    const auto col =
        DeterministicStrategy::from_index(representative[static_cast<std::size_t>(multisets[arg][static_cast<std::size_t>(k)])], n, 1, o);
    for (int x = 0; x < n; ++x) g.set(x, k, col(x, 0));
  }
  out.beta = beta;
  out.strategy = g;
  out.distinct = multisets.size();
  out.exact = false;
  return out;
}

struct CriticalVisibility {
  double v = 1.0;
  bool violated = false;
  double witness = 0.0;  // W(M)
  double noise = 0.0;    // W of the fully depolarized set
};

/// Solves v·W(M) + (1−v)·W(Φ_0(M)) = β. Returns v = 1 with violated = false
/// when W(M) ≤ β.
inline CriticalVisibility critical_visibility(const WitnessSpec& spec, const MeasurementSet& m, double beta) {
  spec.check_against(m);
  CriticalVisibility out;
  out.witness = witness_value(spec, m);
  const int d = m.dim();
  for (int x = 0; x < m.settings(); ++x) {
    for (int a = 0; a < m.outcomes(); ++a) {
      const double tm = m(x, a).trace().real();
      for (int z = 0; z < spec.states(); ++z) {
        out.noise += spec.c(a, z, x) * spec.ensemble()[z].trace().real() * tm / d;
      }
    }
  }
  if (out.witness <= beta + 1e-12) return out;
  const double slope = out.witness - out.noise;
  if (std::abs(slope) < 1e-12) throw InvalidArgument("critical visibility undefined: witness equals its noise value");
  out.v = (beta - out.noise) / slope;
  out.violated = true;
  return out;
}

}  // namespace classim
