#pragma once

// Dense complex linear algebra for small Hilbert spaces (d <= ~16).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "classim/errors.hpp"
#include "classim/random.hpp"

namespace classim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kPsdClampTol = 1e-10;

/// Largest absolute entry, the ‖·‖_max norm used for every residual.
inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_residual(const CMatrix& m) {
  return max_abs(m - m.adjoint());
}

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag())) return false;
  }
  return true;
}

/// Re Tr(A B). For Hermitian A and B this is the full trace.
inline double trace_product(const CMatrix& a, const CMatrix& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      acc += (a(i, j) * b(j, i)).real();
    }
  }
  return acc;
}

inline CMatrix identity(int d) { return CMatrix::Identity(d, d); }

inline CMatrix projector(const CVector& v) { return v * v.adjoint(); }

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

/// Block-diagonal sum A ⊕ B.
inline CMatrix direct_sum(const CMatrix& a, const CMatrix& b) {
  CMatrix out = CMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// A d×d matrix with ‖H − H†‖_max ≤ 1e−12. Stored exactly Hermitian.
class HermitianOperator {
 public:
  explicit HermitianOperator(const CMatrix& m, double tol = kHermitianTol) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw StructuralError("Hermitian operator must be a non-empty square matrix, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!all_finite(m)) throw StructuralError("Hermitian operator has non-finite entries");
    const double r = hermiticity_residual(m);
    if (r > tol) {
      throw StructuralError("matrix is not Hermitian: ‖H − H†‖_max = " + std::to_string(r));
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  /// Hermitian part (M + M†)/2, no check.
  static HermitianOperator hermitian_part(const CMatrix& m) {
    return HermitianOperator(CMatrix(0.5 * (m + m.adjoint())));
  }

  const CMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

 private:
  CMatrix m_;
};

/// A d×d matrix with ‖U†U − 𝟙‖_max ≤ 1e−10.
class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(CMatrix m, double tol = kUnitaryTol) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) {
      throw StructuralError("unitary must be a non-empty square matrix");
    }
    if (!all_finite(m_)) throw StructuralError("unitary has non-finite entries");
    const double r = max_abs(m_.adjoint() * m_ - CMatrix::Identity(m_.rows(), m_.cols()));
    if (r > tol) {
      throw StructuralError("matrix is not unitary: ‖U†U − 𝟙‖_max = " + std::to_string(r));
    }
  }

  static UnitaryMatrix identity(int d) { return UnitaryMatrix(CMatrix::Identity(d, d)); }

  const CMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  CVector column(int k) const { return m_.col(k); }
  /// Rank-1 projector U|k⟩⟨k|U†.
  CMatrix projector(int k) const { return classim::projector(m_.col(k)); }

 private:
  CMatrix m_;
};

struct EigenDecomposition {
  RVector values;  // ascending
  CMatrix vectors; // columns are orthonormal eigenvectors
};

inline EigenDecomposition eig_hermitian(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) {
    throw StructuralError("Hermitian eigendecomposition did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline EigenDecomposition eig_hermitian(const CMatrix& m) { return eig_hermitian(HermitianOperator(m)); }

inline double min_eigenvalue(const CMatrix& m) {
  return eig_hermitian(HermitianOperator::hermitian_part(m)).values(0);
}

inline double max_eigenvalue(const CMatrix& m) {
  const auto e = eig_hermitian(HermitianOperator::hermitian_part(m));
  return e.values(e.values.size() - 1);
}

/// Principal square root of a PSD operator. Eigenvalues in [−1e−10, 0) are
/// clamped to zero; anything more negative is an error.
inline HermitianOperator sqrt_psd(const HermitianOperator& h) {
  const auto e = eig_hermitian(h);
  RVector roots(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const double lam = e.values(i);
    if (lam < -kPsdClampTol) {
      throw NegativityError("sqrt_psd: eigenvalue " + std::to_string(lam) + " is negative");
    }
    roots(i) = std::sqrt(std::max(lam, 0.0));
  }
  const CMatrix r = e.vectors * roots.cast<Complex>().asDiagonal() * e.vectors.adjoint();
  return HermitianOperator::hermitian_part(r);
}

/// Haar-distributed unitary: complex Ginibre matrix, QR, and the phase of the
/// R diagonal folded back into Q.
inline UnitaryMatrix haar_unitary(int d, Rng& rng) {
  if (d < 1) throw InvalidArgument("haar_unitary: dimension must be >= 1");
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  CMatrix z(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      z(i, j) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix& r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const Complex rjj = r(j, j);
    const double mag = std::abs(rjj);
    const Complex phase = mag > 0.0 ? rjj / mag : Complex(1.0, 0.0);
    q.col(j) *= phase;
  }
  return UnitaryMatrix(std::move(q));
}

struct SampleMean {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo estimate of E[max_a |u_a|²] for a Haar-random unit vector u in
/// C^d (the first column of a Haar unitary). The exact value is H_d / d.
inline SampleMean max_component_statistic(int d, std::size_t samples, Rng& rng) {
  if (d < 1) throw InvalidArgument("max_component_statistic: dimension must be >= 1");
  if (samples < 1) throw InvalidArgument("max_component_statistic: need at least one sample");
  if (d == 1) return {1.0, 0.0, samples};
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const UnitaryMatrix u = haar_unitary(d, rng);
    double best = 0.0;
    for (int a = 0; a < d; ++a) best = std::max(best, std::norm(u.matrix()(a, 0)));
    sum += best;
    sum_sq += best * best;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n), samples};
}

/// Orthonormal basis of the real vector space of d×d Hermitian matrices under
/// ⟨A, B⟩ = Tr(AB). Ordering: diagonal units E_jj, then for each j < k the
/// symmetric (E_jk + E_kj)/√2 and antisymmetric i(E_kj − E_jk)/√2 elements.
class HermitianBasis {
 public:
  explicit HermitianBasis(int d) : d_(d) {
    if (d < 1) throw InvalidArgument("HermitianBasis: dimension must be >= 1");
    const double s = 1.0 / std::sqrt(2.0);
    elements_.reserve(static_cast<std::size_t>(d) * d);
    for (int j = 0; j < d; ++j) {
      CMatrix e = CMatrix::Zero(d, d);
      e(j, j) = 1.0;
      elements_.push_back(e);
    }
    for (int j = 0; j < d; ++j) {
      for (int k = j + 1; k < d; ++k) {
        CMatrix sym = CMatrix::Zero(d, d);
        sym(j, k) = s;
        sym(k, j) = s;
        elements_.push_back(sym);
        CMatrix anti = CMatrix::Zero(d, d);
        anti(j, k) = Complex(0.0, -s);
        anti(k, j) = Complex(0.0, s);
        elements_.push_back(anti);
      }
    }
  }

  int dim() const { return d_; }
  int size() const { return d_ * d_; }
  const CMatrix& element(int i) const { return elements_[static_cast<std::size_t>(i)]; }

  /// Tr(B_i) for every basis element (1 on the diagonal units, 0 otherwise).
  double trace_of(int i) const { return i < d_ ? 1.0 : 0.0; }

  /// Real coefficients c_i = Tr(B_i H).
  RVector coefficients(const CMatrix& h) const {
    RVector c(size());
    const double r2 = std::sqrt(2.0);
    for (int j = 0; j < d_; ++j) c(j) = h(j, j).real();
    int idx = d_;
    for (int j = 0; j < d_; ++j) {
      for (int k = j + 1; k < d_; ++k) {
        // Average the two triangles so slightly non-Hermitian input projects cleanly.
        const Complex hjk = 0.5 * (h(j, k) + std::conj(h(k, j)));
        c(idx++) = r2 * hjk.real();
        c(idx++) = -r2 * hjk.imag();
      }
    }
    return c;
  }

  CMatrix reconstruct(const RVector& c) const {
    CMatrix h = CMatrix::Zero(d_, d_);
    for (int i = 0; i < size(); ++i) h += c(i) * elements_[static_cast<std::size_t>(i)];
    return h;
  }

 private:
  int d_;
  std::vector<CMatrix> elements_;
};

}  // namespace classim
