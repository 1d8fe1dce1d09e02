#pragma once

// POVMs, measurement sets, noise channels and the concrete measurement families.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "classim/errors.hpp"
#include "classim/linalg.hpp"

namespace classim {

inline constexpr double kPsdTol = 1e-10;
inline constexpr double kCompletenessTol = 1e-9;

namespace detail {

inline std::string where(int x, int a) {
  return "setting " + std::to_string(x) + ", outcome " + std::to_string(a);
}

inline void check_element(const CMatrix& m, int d, int x, int a) {
  if (m.rows() != d || m.cols() != d) {
    throw StructuralError(where(x, a) + ": expected " + std::to_string(d) + "x" + std::to_string(d) +
                          " matrix, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!all_finite(m)) throw StructuralError(where(x, a) + ": non-finite entry");
  const double herm = hermiticity_residual(m);
  if (herm > kHermitianTol) {
    throw StructuralError(where(x, a) + ": not Hermitian (residual " + std::to_string(herm) + ")");
  }
  const double lam = min_eigenvalue(m);
  if (lam < -kPsdTol) {
    throw NegativityError(where(x, a) + ": eigenvalue " + std::to_string(lam) + " is negative");
  }
}

inline void check_completeness(const CMatrix& sum, int x) {
  const double r = max_abs(sum - CMatrix::Identity(sum.rows(), sum.cols()));
  if (r > kCompletenessTol) {
    throw StructuralError("setting " + std::to_string(x) + ": elements sum to identity only within " +
                          std::to_string(r));
  }
}

}  // namespace detail

/// A single POVM {M_a}: PSD elements summing to the identity.
class Povm {
 public:
  explicit Povm(const std::vector<CMatrix>& elements) {
    if (elements.empty()) throw StructuralError("POVM needs at least one outcome");
    const int d = static_cast<int>(elements.front().rows());
    if (d < 1) throw StructuralError("POVM dimension must be >= 1");
    CMatrix sum = CMatrix::Zero(d, d);
    for (std::size_t a = 0; a < elements.size(); ++a) {
      detail::check_element(elements[a], d, 0, static_cast<int>(a));
      elements_.push_back(HermitianOperator::hermitian_part(elements[a]));
      sum += elements_.back().matrix();
    }
    detail::check_completeness(sum, 0);
    dim_ = d;
  }

  int dim() const { return dim_; }
  int outcomes() const { return static_cast<int>(elements_.size()); }
  const CMatrix& operator[](int a) const { return elements_[static_cast<std::size_t>(a)].matrix(); }
  const std::vector<HermitianOperator>& elements() const { return elements_; }

 private:
  int dim_ = 0;
  std::vector<HermitianOperator> elements_;
};

/// An indexed family {M_{a|x}} on one Hilbert space. Settings with fewer than
/// `outcomes()` elements are padded with zero operators.
class MeasurementSet {
 public:
  MeasurementSet() = default;

  /// Validates every setting and reports the first violation with indices.
  explicit MeasurementSet(const std::vector<std::vector<CMatrix>>& settings) {
    if (settings.empty()) throw StructuralError("measurement set needs at least one setting");
    if (settings.front().empty()) throw StructuralError("setting 0 has no outcomes");
    const int d = static_cast<int>(settings.front().front().rows());
    if (d < 1) throw StructuralError("measurement dimension must be >= 1");
    std::size_t o = 0;
    for (const auto& s : settings) o = std::max(o, s.size());
    dim_ = d;
    outcomes_ = static_cast<int>(o);
    for (std::size_t x = 0; x < settings.size(); ++x) {
      if (settings[x].empty()) throw StructuralError("setting " + std::to_string(x) + " has no outcomes");
      std::vector<HermitianOperator> row;
      CMatrix sum = CMatrix::Zero(d, d);
      for (std::size_t a = 0; a < o; ++a) {
        if (a < settings[x].size()) {
          detail::check_element(settings[x][a], d, static_cast<int>(x), static_cast<int>(a));
          row.push_back(HermitianOperator::hermitian_part(settings[x][a]));
        } else {
          row.emplace_back(CMatrix::Zero(d, d));
        }
        sum += row.back().matrix();
      }
      detail::check_completeness(sum, static_cast<int>(x));
      elements_.push_back(std::move(row));
    }
  }

  explicit MeasurementSet(const std::vector<Povm>& povms) : MeasurementSet(to_matrices(povms)) {}

  int dim() const { return dim_; }
  int settings() const { return static_cast<int>(elements_.size()); }
  int outcomes() const { return outcomes_; }
  const CMatrix& operator()(int x, int a) const {
    return elements_[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)].matrix();
  }

  Povm setting(int x) const {
    std::vector<CMatrix> els;
    for (int a = 0; a < outcomes_; ++a) els.push_back((*this)(x, a));
    return Povm(els);
  }

  std::vector<std::vector<CMatrix>> matrices() const {
    std::vector<std::vector<CMatrix>> out(elements_.size());
    for (int x = 0; x < settings(); ++x) {
      for (int a = 0; a < outcomes_; ++a) out[static_cast<std::size_t>(x)].push_back((*this)(x, a));
    }
    return out;
  }

  /// True when M_{a|x} is the zero operator (a padded or unreachable outcome).
  bool is_zero(int x, int a, double tol = 1e-14) const { return max_abs((*this)(x, a)) <= tol; }

 private:
  static std::vector<std::vector<CMatrix>> to_matrices(const std::vector<Povm>& povms) {
    std::vector<std::vector<CMatrix>> out;
    for (const auto& p : povms) {
      std::vector<CMatrix> row;
      for (int a = 0; a < p.outcomes(); ++a) row.push_back(p[a]);
      out.push_back(std::move(row));
    }
    return out;
  }

  int dim_ = 0;
  int outcomes_ = 0;
  std::vector<std::vector<HermitianOperator>> elements_;
};

/// A list of density matrices {ρ_z}.
class StateEnsemble {
 public:
  StateEnsemble() = default;

  explicit StateEnsemble(const std::vector<CMatrix>& states) {
    if (states.empty()) throw StructuralError("state ensemble needs at least one state");
    dim_ = static_cast<int>(states.front().rows());
    for (std::size_t z = 0; z < states.size(); ++z) {
      const CMatrix& r = states[z];
      const std::string tag = "state " + std::to_string(z);
      if (r.rows() != dim_ || r.cols() != dim_) throw StructuralError(tag + ": dimension mismatch");
      if (!all_finite(r)) throw StructuralError(tag + ": non-finite entry");
      if (hermiticity_residual(r) > kHermitianTol) throw StructuralError(tag + ": not Hermitian");
      if (min_eigenvalue(r) < -kPsdTol) throw NegativityError(tag + ": not positive semidefinite");
      if (std::abs(r.trace().real() - 1.0) > 1e-10) throw StructuralError(tag + ": trace is not 1");
      states_.push_back(HermitianOperator::hermitian_part(r));
    }
  }

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(states_.size()); }
  const CMatrix& operator[](int z) const { return states_[static_cast<std::size_t>(z)].matrix(); }

 private:
  int dim_ = 0;
  std::vector<HermitianOperator> states_;
};

/// Φ_v(X) = vX + (1 − v)Tr(X)𝟙/d.
inline CMatrix depolarize_operator(const CMatrix& x, double v) {
  const int d = static_cast<int>(x.rows());
  return v * x + ((1.0 - v) * x.trace().real() / d) * CMatrix::Identity(d, d);
}

inline void check_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InvalidArgument(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

inline MeasurementSet depolarize(const MeasurementSet& m, double v) {
  check_unit_interval(v, "visibility");
  auto els = m.matrices();
  for (auto& row : els) {
    for (auto& e : row) e = depolarize_operator(e, v);
  }
  return MeasurementSet(els);
}

inline Povm depolarize(const Povm& p, double v) {
  check_unit_interval(v, "visibility");
  std::vector<CMatrix> els;
  for (int a = 0; a < p.outcomes(); ++a) els.push_back(depolarize_operator(p[a], v));
  return Povm(els);
}

/// Scales every element by η and appends the failure outcome (1 − η)𝟙.
inline MeasurementSet apply_loss(const MeasurementSet& m, double eta) {
  check_unit_interval(eta, "efficiency");
  auto els = m.matrices();
  for (auto& row : els) {
    for (auto& e : row) e *= eta;
    row.push_back((1.0 - eta) * CMatrix::Identity(m.dim(), m.dim()));
  }
  return MeasurementSet(els);
}

inline bool is_prime(int n) {
  if (n < 2) return false;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p == 0) return false;
  }
  return true;
}

/// Rank-1 projective measurement onto the columns of a unitary.
inline Povm basis_measurement(const UnitaryMatrix& u) {
  std::vector<CMatrix> els;
  for (int k = 0; k < u.dim(); ++k) els.push_back(u.projector(k));
  return Povm(els);
}

/// Unitaries whose columns are the mutually unbiased bases in prime dimension
/// d: computational basis first, then the quadratic-phase Fourier bases. For
/// d = 2 the eigenbases of Z, X and Y.
inline std::vector<UnitaryMatrix> mub_bases(int d, int count) {
  if (!is_prime(d)) throw InvalidArgument("mub_set: dimension " + std::to_string(d) + " is not prime");
  if (count < 2 || count > d + 1) {
    throw InvalidArgument("mub_set: count must be in [2, " + std::to_string(d + 1) + "], got " +
                          std::to_string(count));
  }
  std::vector<UnitaryMatrix> out;
  out.push_back(UnitaryMatrix::identity(d));
  if (d == 2) {
    const double s = 1.0 / std::sqrt(2.0);
    CMatrix x(2, 2), y(2, 2);
    x << s, s, s, -s;
    y << s, s, Complex(0, s), Complex(0, -s);
    out.emplace_back(x);
    if (count == 3) out.emplace_back(y);
    return out;
  }
  const long half = (d + 1) / 2;
  const double norm = 1.0 / std::sqrt(static_cast<double>(d));
  for (int x = 0; x + 1 < count; ++x) {
    CMatrix u(d, d);
    for (int a = 0; a < d; ++a) {
      for (int k = 0; k < d; ++k) {
        const long e = (static_cast<long>(a) * k + static_cast<long>(x) * k * k % d * half) % d;
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(e) / d;
        u(k, a) = norm * Complex(std::cos(phase), std::sin(phase));
      }
    }
    out.emplace_back(u);
  }
  return out;
}

inline MeasurementSet mub_set(int d, int count) {
  std::vector<Povm> povms;
  for (const auto& u : mub_bases(d, count)) povms.push_back(basis_measurement(u));
  return MeasurementSet(povms);
}

/// The 20 dodecahedron vertices, normalized: the cube (±1,±1,±1) and the
/// three cyclic (0, ±1/φ, ±φ) families, signs in binary counting order.
inline std::array<std::array<double, 3>, 20> dodecahedron_vertices() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double inv = 1.0 / phi;
  std::array<std::array<double, 3>, 20> v{};
  int i = 0;
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) {
      for (double sz : {1.0, -1.0}) v[i++] = {sx, sy, sz};
    }
  }
  for (double s1 : {1.0, -1.0}) {
    for (double s2 : {1.0, -1.0}) v[i++] = {0.0, s1 * inv, s2 * phi};
  }
  for (double s1 : {1.0, -1.0}) {
    for (double s2 : {1.0, -1.0}) v[i++] = {s1 * inv, s2 * phi, 0.0};
  }
  for (double s1 : {1.0, -1.0}) {
    for (double s2 : {1.0, -1.0}) v[i++] = {s1 * phi, 0.0, s2 * inv};
  }
  const double r = std::sqrt(3.0);
  for (auto& p : v) {
    for (double& c : p) c /= r;
  }
  return v;
}

/// Partition of the dodecahedron vertices into five regular tetrahedra.
inline constexpr std::array<std::array<int, 4>, 5> kTetrahedra{{
    {0, 3, 5, 6}, {1, 8, 13, 19}, {2, 11, 12, 18}, {4, 9, 15, 16}, {7, 10, 14, 17}}};

/// Qubit element w(𝟙 + n⃗·σ⃗)/2 for a unit Bloch vector n⃗.
inline CMatrix bloch_element(const std::array<double, 3>& n, double w) {
  CMatrix m(2, 2);
  m << 1.0 + n[2], Complex(n[0], -n[1]), Complex(n[0], n[1]), 1.0 - n[2];
  return 0.5 * w * m;
}

/// Five qubit SIC-POVMs whose 20 Bloch vectors form the compound of five tetrahedra.
inline MeasurementSet sic_five_tetrahedra() {
  const auto v = dodecahedron_vertices();
  for (const auto& t : kTetrahedra) {
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        const auto& p = v[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])];
        const auto& q = v[static_cast<std::size_t>(t[static_cast<std::size_t>(j)])];
        const double dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        if (std::abs(dot + 1.0 / 3.0) > 1e-9) throw StructuralError("tetrahedron table is corrupt");
      }
    }
  }
  std::vector<std::vector<CMatrix>> els;
  for (const auto& t : kTetrahedra) {
    std::vector<CMatrix> row;
    for (int idx : t) row.push_back(bloch_element(v[static_cast<std::size_t>(idx)], 0.5));
    els.push_back(std::move(row));
  }
  return MeasurementSet(els);
}

/// A single qubit SIC-POVM (the first tetrahedron of the compound).
inline Povm qubit_sic() { return sic_five_tetrahedra().setting(0); }

/// The trine POVM M_a = (2/3)|ψ_a⟩⟨ψ_a|, ψ_a = cos(aπ/3)|0⟩ + sin(aπ/3)|1⟩, a = 1, 2, 3.
inline Povm trine() {
  std::vector<CMatrix> els;
  for (int a = 1; a <= 3; ++a) {
    CVector psi(2);
    const double t = a * std::numbers::pi / 3.0;
    psi << std::cos(t), std::sin(t);
    els.push_back((2.0 / 3.0) * projector(psi));
  }
  return Povm(els);
}

/// M_a = |a⟩⟨a| ⊕ M̃_a on dimension o + d.
inline Povm extend_direct_sum(const Povm& p) {
  const int o = p.outcomes();
  std::vector<CMatrix> els;
  for (int a = 0; a < o; ++a) {
    CMatrix e = CMatrix::Zero(o, o);
    e(a, a) = 1.0;
    els.push_back(direct_sum(e, p[a]));
  }
  return Povm(els);
}

/// Probe states ρ_{(a,x)} = M_{a|x}/Tr M_{a|x}, indexed z = x·o + a. Zero
/// (padded) elements get the placeholder 𝟙/d.
inline StateEnsemble discrimination_ensemble(const MeasurementSet& m) {
  const int d = m.dim();
  std::vector<CMatrix> states;
  for (int x = 0; x < m.settings(); ++x) {
    for (int a = 0; a < m.outcomes(); ++a) {
      const CMatrix& e = m(x, a);
      const double tr = e.trace().real();
      if (m.is_zero(x, a) || tr <= 1e-14) {
        states.push_back(CMatrix::Identity(d, d) / d);
        continue;
      }
      const CMatrix rho = e / tr;
      if (max_abs(rho * rho - rho) > 1e-8) {
        throw UnsupportedError("discrimination_ensemble: " + detail::where(x, a) +
                               " is not proportional to a rank-1 projector");
      }
      states.push_back(rho);
    }
  }
  return StateEnsemble(states);
}

}  // namespace classim
