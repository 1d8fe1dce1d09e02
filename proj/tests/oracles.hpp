#pragma once

// Independent reference computations used to check library results.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

/// Exact rational H_n = num/den.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline Rational harmonic_exact(int n) {
  Rational r{0, 1};
  for (int k = 1; k <= n; ++k) {
    const std::int64_t num = r.num * k + r.den;
    const std::int64_t den = r.den * k;
    const std::int64_t g = std::gcd(num, den);
    r = {num / g, den / g};
  }
  return r;
}

/// max cᵀx s.t. Ax = b, x ≥ 0 by enumerating every basis of a full-row-rank
/// A. Returns −inf when no feasible vertex exists.
inline double lp_by_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(m));
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  std::fill(mask.begin(), mask.begin() + m, true);
  do {
    int t = 0;
    for (int j = 0; j < n; ++j) {
      if (mask[static_cast<std::size_t>(j)]) pick[static_cast<std::size_t>(t++)] = j;
    }
    Eigen::MatrixXd bm(m, m);
    for (int i = 0; i < m; ++i) bm.col(i) = a.col(pick[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bm);
    if (lu.rank() < m) continue;
    const Eigen::VectorXd xb = lu.solve(b);
    if (xb.minCoeff() < -1e-10) continue;
    double obj = 0.0;
    for (int i = 0; i < m; ++i) obj += c(pick[static_cast<std::size_t>(i)]) * xb(i);
    best = std::max(best, obj);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

/// Brute-force qubit witness bound: for every strategy table γ(x,k) over
/// k ∈ {0,1}, the best basis gives Tr(C_1) + λ_max(C_0 − C_1).
/// O[x][a] are 2×2 Hermitian score operators.
inline double qubit_bound_brute_force(const std::vector<std::vector<Eigen::MatrixXcd>>& o) {
  const int n = static_cast<int>(o.size());
  const int outcomes = static_cast<int>(o.front().size());
  std::int64_t total = 1;
  for (int i = 0; i < 2 * n; ++i) total *= outcomes;
  double best = -std::numeric_limits<double>::infinity();
  for (std::int64_t g = 0; g < total; ++g) {
    std::int64_t code = g;
    Eigen::MatrixXcd c0 = Eigen::MatrixXcd::Zero(2, 2);
    Eigen::MatrixXcd c1 = Eigen::MatrixXcd::Zero(2, 2);
    for (int x = 0; x < n; ++x) {
      const int a0 = static_cast<int>(code % outcomes);
      code /= outcomes;
      const int a1 = static_cast<int>(code % outcomes);
      code /= outcomes;
      c0 += o[static_cast<std::size_t>(x)][static_cast<std::size_t>(a0)];
      c1 += o[static_cast<std::size_t>(x)][static_cast<std::size_t>(a1)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c0 - c1);
    best = std::max(best, c1.trace().real() + es.eigenvalues()(1));
  }
  return best;
}

inline Eigen::MatrixXcd random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = std::complex<double>(g(rng), g(rng));
  }
  return 0.5 * (m + m.adjoint());
}

inline Eigen::MatrixXcd random_psd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = std::complex<double>(g(rng), g(rng));
  }
  return m * m.adjoint();
}

inline Eigen::VectorXcd random_unit_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(d);
  for (int i = 0; i < d; ++i) v(i) = std::complex<double>(g(rng), g(rng));
  return v / v.norm();
}

/// Random POVM with `outcomes` elements: G_a = S^{-1/2} P_a S^{-1/2} with
/// S = Σ P_a for random PSD P_a.
inline std::vector<Eigen::MatrixXcd> random_povm(int d, int outcomes, std::mt19937_64& rng) {
  std::vector<Eigen::MatrixXcd> p;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(d, d);
  for (int a = 0; a < outcomes; ++a) {
    p.push_back(random_psd(d, rng));
    s += p.back();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
  const Eigen::MatrixXcd inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().cast<std::complex<double>>().asDiagonal() *
      es.eigenvectors().adjoint();
  for (auto& e : p) {
    e = inv_sqrt * e * inv_sqrt;
    e = 0.5 * (e + e.adjoint()).eval();
  }
  // Push the rounding error of the completeness relation into the last element.
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d, d);
  for (int a = 0; a + 1 < outcomes; ++a) sum += p[static_cast<std::size_t>(a)];
  p.back() = Eigen::MatrixXcd::Identity(d, d) - sum;
  return p;
}

}  // namespace oracle
