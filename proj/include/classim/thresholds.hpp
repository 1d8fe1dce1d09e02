#pragma once

// Closed-form visibility and efficiency limits for the family of all
// projective measurements in dimension d.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "classim/errors.hpp"
#include "classim/linalg.hpp"
#include "classim/random.hpp"

namespace classim {

/// H_n = Σ_{k=1}^n 1/k, summed from the smallest term.
inline double harmonic(int n) {
  if (n < 1) throw InvalidArgument("harmonic: n must be >= 1, got " + std::to_string(n));
  double s = 0.0;
  for (int k = n; k >= 1; --k) s += 1.0 / k;
  return s;
}

/// (H_d − 1)/(d − 1).
inline double classicality_threshold(int d) {
  if (d < 2) throw InvalidArgument("classicality_threshold: d must be >= 2, got " + std::to_string(d));
  return (harmonic(d) - 1.0) / (d - 1);
}

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  if (n <= 60) {
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return static_cast<double>(c);
  }
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

inline double pairwise_sum(const std::vector<double>& v, std::size_t b, std::size_t e) {
  if (e - b <= 2) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = b + (e - b) / 2;
  return pairwise_sum(v, b, mid) + pairwise_sum(v, mid, e);
}

}  // namespace detail

/// S_n(t) = Σ_{m=n}^{min(⌊1/t⌋, d)} ((−1)^m/m^n) C(d,m) (1 − tm)^{d−1}, n ∈ {0, 1}.
inline double s_n(double t, int d, int n) {
  if (!(t > 0.0)) throw InvalidArgument("s_n: t must be positive");
  if (n != 0 && n != 1) throw InvalidArgument("s_n: n must be 0 or 1");
  if (d < 1) throw InvalidArgument("s_n: d must be >= 1");
  const double inv = std::floor(1.0 / t + 1e-12);
  const int top = inv >= d ? d : static_cast<int>(inv);
  std::vector<double> terms;
  for (int m = n; m <= top; ++m) {
    const double sign = m % 2 == 0 ? 1.0 : -1.0;
    const double base = std::max(0.0, 1.0 - t * m);
    const double power = d == 1 ? 1.0 : std::pow(base, d - 1);
    const double denom = n == 1 ? static_cast<double>(m) : 1.0;
    terms.push_back(sign / denom * detail::binomial(d, m) * power);
  }
  return detail::pairwise_sum(terms, 0, terms.size());
}

struct LossNoisePoint {
  double t = 0.0;
  double v = 0.0;
  double eta = 0.0;
};

/// (v, η) = (t − (S_1/(1 − S_0) + 1)/(d − 1), 1 − S_0) at one parameter value.
inline LossNoisePoint loss_noise_point(int d, double t) {
  if (d < 2) throw InvalidArgument("loss_noise_curve: d must be >= 2");
  if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("loss_noise_curve: t must lie in (0, 1]");
  const double s0 = s_n(t, d, 0);
  const double s1 = s_n(t, d, 1);
  const double eta = 1.0 - s0;
  if (eta < 1e-12) throw InvalidArgument("loss_noise_curve: singular point at t = " + std::to_string(t));
  return {t, t - (s1 / eta + 1.0) / (d - 1), eta};
}

inline std::vector<LossNoisePoint> loss_noise_curve(int d, const std::vector<double>& t_grid) {
  std::vector<LossNoisePoint> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) out.push_back(loss_noise_point(d, t));
  return out;
}

/// η*(d, v) = d(1 − v)^{d−1}, valid for v > 1/2.
inline double critical_efficiency(int d, double v) {
  if (d < 2) throw InvalidArgument("critical_efficiency: d must be >= 2");
  if (!(v > 0.5 && v <= 1.0)) throw InvalidArgument("critical_efficiency: closed form needs 1/2 < v <= 1");
  return d * std::pow(1.0 - v, d - 1);
}

struct MonteCarloCheck {
  int dim = 0;
  SampleMean sample;
  double expected = 0.0;  // H_d/d
  double z = 0.0;
};

/// Compares the sampled mean of max_a |u_a|² with H_d/d. Samples come from
/// the "monte-carlo" stream of the seed.
inline MonteCarloCheck mc_check(int d, std::size_t samples, std::uint64_t seed) {
  Rng rng = make_stream(seed, "monte-carlo", static_cast<std::uint64_t>(d));
  MonteCarloCheck out;
  out.dim = d;
  out.sample = max_component_statistic(d, samples, rng);
  out.expected = harmonic(d) / d;
  const double diff = out.sample.mean - out.expected;
  out.z = out.sample.standard_error > 0.0 ? diff / out.sample.standard_error : (diff == 0.0 ? 0.0 : INFINITY);
  return out;
}

}  // namespace classim
