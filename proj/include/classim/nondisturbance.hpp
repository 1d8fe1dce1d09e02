#pragma once

// Sequential-measurement consequences of classical models: Lüders
// non-disturbance, joint-measurement parents and the joint-measurability SDP.

#include <cmath>
#include <string>
#include <vector>

#include "classim/errors.hpp"
#include "classim/linalg.hpp"
#include "classim/measurements.hpp"
#include "classim/model_search.hpp"
#include "classim/sdp.hpp"

namespace classim {

inline constexpr double kLudersDisturbanceTol = 1e-5;

/// Shared randomness q(λ) with per-λ POVMs for the first (A) and second (B)
/// measurement, plus the averaged targets.
struct SequentialScenario {
  std::vector<double> weights;
  std::vector<Povm> first;
  std::vector<Povm> second;
  Povm target_first;
  Povm target_second;

  /// max over outcomes of ‖Σ_λ q(λ)A_{a|λ} − A_a‖_max and the same for B.
  double averaging_residual() const {
    double r = 0.0;
    auto check = [&](const std::vector<Povm>& parts, const Povm& target) {
      for (int a = 0; a < target.outcomes(); ++a) {
        CMatrix s = CMatrix::Zero(target.dim(), target.dim());
        for (std::size_t l = 0; l < weights.size(); ++l) s += weights[l] * parts[l][a];
        r = std::max(r, max_abs(s - target[a]));
      }
    };
    check(first, target_first);
    check(second, target_second);
    return r;
  }

  void validate(double tol = 1e-8) const {
    if (weights.size() != first.size() || weights.size() != second.size() || weights.empty()) {
      throw StructuralError("scenario: weights and per-λ POVMs differ in length");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (first[l].outcomes() != target_first.outcomes() || second[l].outcomes() != target_second.outcomes() ||
          first[l].dim() != target_first.dim() || second[l].dim() != target_first.dim()) {
        throw StructuralError("scenario: POVM shape differs at λ = " + std::to_string(l));
      }
    }
    if (averaging_residual() > tol) throw StructuralError("scenario: per-λ POVMs do not average to the targets");
  }
};

namespace detail {

inline Povm device_povm(const ClassicalModel& model, int l, int x) {
  const int d = model.dim, o = model.outcomes;
  std::vector<CMatrix> els(static_cast<std::size_t>(o), CMatrix::Zero(d, d));
  for (int k = 0; k < d; ++k) {
    double total = 0.0;
    for (int a = 0; a < o; ++a) total += model.q(a, l, x, k);
    for (int a = 0; a < o; ++a) {
      const double p = total > 0.0 ? model.q(a, l, x, k) / total : (a == 0 ? 1.0 : 0.0);
      if (p != 0.0) els[static_cast<std::size_t>(a)] += p * model.bases[static_cast<std::size_t>(l)].projector(k);
    }
  }
  return Povm(els);
}

inline Povm model_marginal(const ClassicalModel& model, int x) {
  std::vector<CMatrix> els;
  for (int a = 0; a < model.outcomes; ++a) els.push_back(model.reconstructed(x, a));
  return Povm(els);
}

}  // namespace detail

/// A_{a|λ} = Σ_k p_A(a|k,λ) E_{k|λ} for setting x_A, likewise B for x_B.
inline SequentialScenario scenario_from_model(const ClassicalModel& model, int x_a, int x_b) {
  model.validate();
  if (x_a < 0 || x_a >= model.settings || x_b < 0 || x_b >= model.settings) {
    throw InvalidArgument("scenario_from_model: setting index out of range");
  }
  if (x_a == x_b) throw InvalidArgument("scenario_from_model: settings must be distinct");
  double mass = 0.0;
  for (double w : model.weights) mass += w;
  if (mass < 1.0 - 1e-9) throw StructuralError("scenario_from_model: model weights sum to " + std::to_string(mass));
  std::vector<double> weights;
  std::vector<Povm> first, second;
  for (int l = 0; l < model.devices(); ++l) {
    weights.push_back(model.weights[static_cast<std::size_t>(l)]);
    first.push_back(detail::device_povm(model, l, x_a));
    second.push_back(detail::device_povm(model, l, x_b));
  }
  SequentialScenario s{weights, first, second, detail::model_marginal(model, x_a), detail::model_marginal(model, x_b)};
  s.validate();
  return s;
}

/// max_b ‖Σ_{a,λ} q(λ) √A_{a|λ} B_{b|λ} √A_{a|λ} − B_b‖_max.
inline double luders_nondisturbance_residual(const SequentialScenario& s) {
  s.validate();
  const int d = s.target_first.dim();
  std::vector<CMatrix> post(static_cast<std::size_t>(s.target_second.outcomes()), CMatrix::Zero(d, d));
  for (std::size_t l = 0; l < s.weights.size(); ++l) {
    for (int a = 0; a < s.first[l].outcomes(); ++a) {
      const CMatrix r = sqrt_psd(s.first[l].elements()[static_cast<std::size_t>(a)]).matrix();
      for (int b = 0; b < s.second[l].outcomes(); ++b) {
        post[static_cast<std::size_t>(b)] += s.weights[l] * (r * s.second[l][b] * r);
      }
    }
  }
  double res = 0.0;
  for (int b = 0; b < s.target_second.outcomes(); ++b) {
    res = std::max(res, max_abs(post[static_cast<std::size_t>(b)] - s.target_second[b]));
  }
  return res;
}

/// Parent POVM G_{(λ,k)} = q(λ)E_{k|λ} with post-processing p(a|x,(λ,k)).
struct JmParent {
  int dim = 0;
  int settings = 0;
  int outcomes = 0;
  std::vector<std::string> labels;                    // "λ:k"
  std::vector<CMatrix> elements;
  std::vector<std::vector<double>> post;              // post[μ][x·o + a]
  std::vector<double> marginal_residual;              // per setting, against the model

  CMatrix marginal(int x, int a) const {
    CMatrix m = CMatrix::Zero(dim, dim);
    for (std::size_t mu = 0; mu < elements.size(); ++mu) {
      const double p = post[mu][static_cast<std::size_t>(x * outcomes + a)];
      if (p != 0.0) m += p * elements[mu];
    }
    return m;
  }

  double completeness_residual() const {
    CMatrix s = CMatrix::Zero(dim, dim);
    for (const auto& g : elements) s += g;
    return max_abs(s - CMatrix::Identity(dim, dim));
  }
};

inline JmParent jm_parent_from_model(const ClassicalModel& model) {
  model.validate();
  JmParent p;
  p.dim = model.dim;
  p.settings = model.settings;
  p.outcomes = model.outcomes;
  for (int l = 0; l < model.devices(); ++l) {
    const double w = model.weights[static_cast<std::size_t>(l)];
    for (int k = 0; k < model.dim; ++k) {
      p.labels.push_back(std::to_string(l) + ":" + std::to_string(k));
      p.elements.push_back(w * model.bases[static_cast<std::size_t>(l)].projector(k));
      std::vector<double> post(static_cast<std::size_t>(model.settings * model.outcomes), 0.0);
      for (int x = 0; x < model.settings; ++x) {
        for (int a = 0; a < model.outcomes; ++a) {
          post[static_cast<std::size_t>(x * model.outcomes + a)] =
              w > 0.0 ? model.q(a, l, x, k) / w : (a == 0 ? 1.0 : 0.0);
        }
      }
      p.post.push_back(std::move(post));
    }
  }
  for (int x = 0; x < model.settings; ++x) {
    double r = 0.0;
    for (int a = 0; a < model.outcomes; ++a) r = std::max(r, max_abs(p.marginal(x, a) - model.reconstructed(x, a)));
    p.marginal_residual.push_back(r);
  }
  return p;
}

/// Per-setting max_a ‖Σ_μ p(a|x,μ)G_μ − Φ_v(M_{a|x})‖_max.
inline std::vector<double> marginal_residuals(const JmParent& p, const MeasurementSet& m, double v) {
  if (m.dim() != p.dim || m.settings() != p.settings || m.outcomes() != p.outcomes) {
    throw StructuralError("parent and measurement set shapes differ");
  }
  std::vector<double> out;
  for (int x = 0; x < m.settings(); ++x) {
    double r = 0.0;
    for (int a = 0; a < m.outcomes(); ++a) r = std::max(r, max_abs(p.marginal(x, a) - depolarize_operator(m(x, a), v)));
    out.push_back(r);
  }
  return out;
}

/// For M = extend_direct_sum(M̃): max_b ‖Σ_a Tr(M_b(|a⟩⟨a| ⊕ 0))M_a − M_b‖_max.
inline double extended_instrument_residual(const Povm& tilde) {
  const Povm m = extend_direct_sum(tilde);
  const int o = m.outcomes(), n = m.dim();
  double res = 0.0;
  for (int b = 0; b < o; ++b) {
    CMatrix s = CMatrix::Zero(n, n);
    for (int a = 0; a < o; ++a) s += m[b](a, a).real() * m[a];
    res = std::max(res, max_abs(s - m[b]));
  }
  return res;
}

struct JmVisibility {
  double v = 0.0;
  double gap = 0.0;
  std::vector<CMatrix> parent;  // G_s, s read as bits s_x = (s >> x) & 1
};

/// max v such that {Π_x, 𝟙 − Π_x} mixed with white noise at visibility v
/// has a common parent indexed by outcome strings s ∈ {0,1}^m.
inline JmVisibility jm_visibility_sdp(const std::vector<Povm>& dichotomic, double tol = 1e-8) {
  const int m = static_cast<int>(dichotomic.size());
  if (m < 1) throw InvalidArgument("jm_visibility_sdp: need at least one setting");
  if (m > 6) throw InvalidArgument("jm_visibility_sdp: " + std::to_string(m) + " settings exceed the limit of 6");
  const int d = dichotomic.front().dim();
  for (int x = 0; x < m; ++x) {
    if (dichotomic[static_cast<std::size_t>(x)].outcomes() != 2) {
      throw InvalidArgument("jm_visibility_sdp: setting " + std::to_string(x) + " is not dichotomic");
    }
    if (dichotomic[static_cast<std::size_t>(x)].dim() != d) {
      throw StructuralError("jm_visibility_sdp: setting " + std::to_string(x) + " has a different dimension");
    }
  }
  const int strings = 1 << m;
  const HermitianBasis basis(d);
  SemidefiniteProgram p;
  for (int s = 0; s < strings; ++s) p.add_block(2 * d);
  const int vblock = p.add_block(1);
  p.objective[static_cast<std::size_t>(vblock)](0, 0) = 1.0;

  std::vector<RMatrix> terms;
  for (int i = 0; i < basis.size(); ++i) terms.push_back(complex_term(basis.element(i)));
  for (int x = 0; x < m; ++x) {
    const CMatrix& pi = dichotomic[static_cast<std::size_t>(x)][0];
    const double tr = pi.trace().real();
    const CMatrix shift = pi - tr / d * CMatrix::Identity(d, d);
    for (int i = 0; i < basis.size(); ++i) {
      SdpConstraint row;
      for (int s = 0; s < strings; ++s) {
        if (((s >> x) & 1) == 0) row.terms.push_back({s, terms[static_cast<std::size_t>(i)]});
      }
      row.terms.push_back({vblock, RMatrix::Constant(1, 1, -trace_product(basis.element(i), shift))});
      row.rhs = tr / d * basis.trace_of(i);
      p.constraints.push_back(std::move(row));
    }
  }
  for (int i = 0; i < basis.size(); ++i) {
    SdpConstraint row;
    for (int s = 0; s < strings; ++s) row.terms.push_back({s, terms[static_cast<std::size_t>(i)]});
    row.rhs = basis.trace_of(i);
    p.constraints.push_back(std::move(row));
  }
  const auto sol = solve_sdp(p, tol);
  if (!sol.optimal()) {
    throw SolverError(std::string("jm_visibility_sdp: ") + to_string(sol.status) + " (" + sol.message + ")");
  }
  JmVisibility out;
  out.v = sol.objective;
  out.gap = sol.gap;
  for (int s = 0; s < strings; ++s) out.parent.push_back(extract_complex(sol.x[static_cast<std::size_t>(s)]));
  return out;
}

/// {Π, 𝟙 − Π} for each element Π of the projectors' list.
inline std::vector<Povm> binarize(const std::vector<CMatrix>& projectors) {
  std::vector<Povm> out;
  for (const auto& pi : projectors) {
    out.push_back(Povm({pi, CMatrix::Identity(pi.rows(), pi.cols()) - pi}));
  }
  return out;
}

}  // namespace classim
