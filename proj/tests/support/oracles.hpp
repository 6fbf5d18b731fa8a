#pragma once

// Closed-form references for the synthetic studies, written independently of
// the library (own Φ, own quantile, own densities).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace oracle {

// Frozen reference values (computed at 30 digits with mpmath).
inline constexpr double kZ90 = 1.6448536269514722;           // Φ⁻¹(0.95)
inline constexpr double kHpdHalfWidth90 = 1.1630871536766738;  // z·√½
inline constexpr double kInvSqrtPi = 0.5641895835477563;
inline constexpr double kHpdCoverageAt0 = 0.9799907462838819;
inline constexpr double kHpdCoverageAt2 = 0.6278461743853293;
inline constexpr double kHpdCoverageAt4 = 0.04708243054739547;
inline constexpr double kPValue20 = 0.04550026389635842;     // h(x=2; θ0=0)
inline constexpr double kQuantile01At0 = 0.28686292044114986;  // 0.1-quantile of π(0|X), X ~ N(0,1)
inline constexpr double kNarrowWeightFar = 1.0527988665844397e-05;

inline double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Bisection on Φ; plenty for test tolerances.
inline double Phi_inv(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (Phi(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// π(θ|x) for prior N(0,1), x|θ ~ N(θ,1): N(x/2, 1/2).
inline double posterior_1d(double x, double theta) {
  const double d = theta - 0.5 * x;
  return std::exp(-d * d) / std::sqrt(std::numbers::pi);
}

// h(x; θ0) = P(λ(X; θ0) ≤ λ(x; θ0)) with X ~ N(θ0, 1). λ decreases in
// |θ0 − X/2|, so h = P(|θ0 − X/2| ≥ d).
inline double pvalue_1d(double x, double theta0) {
  const double d = std::abs(theta0 - 0.5 * x);
  return 1.0 - Phi(2.0 * d - theta0) + Phi(-2.0 * d - theta0);
}

// P(λ(X; θ0) ≤ t) for the 1D study.
inline double statistic_cdf_1d(double t, double theta0) {
  const double top = 1.0 / std::sqrt(std::numbers::pi);
  if (t >= top) return 1.0;
  if (t <= 0.0) return 0.0;
  const double d = std::sqrt(-std::log(t / top));
  return 1.0 - Phi(2.0 * d - theta0) + Phi(-2.0 * d - theta0);
}

// Local coverage of the exact 90%-style HPD interval x/2 ± z/√2 at θ.
inline double hpd_coverage_1d(double theta, double credibility) {
  const double reach = Phi_inv(0.5 + 0.5 * credibility) * std::sqrt(2.0);
  return Phi(theta + reach) - Phi(theta - reach);
}

// Posterior for prior N(0, v0·I) and likelihood w·N(θ, s1·I) + (1−w)·N(θ, s2·I)
// in dimension d, written out from the per-component conjugate update.
struct MixturePosterior {
  double v0 = 2.0, s1 = 1.0, s2 = 0.01, w = 0.5;
  int dim = 2;

  double log_normal(std::span<const double> x, double var) const {
    double q = 0.0;
    for (double v : x) q += v * v;
    return -0.5 * q / var - 0.5 * dim * std::log(2.0 * std::numbers::pi * var);
  }
  // Posterior weight of the narrow (s2) component.
  double narrow_weight(std::span<const double> x) const {
    const double a = std::log(w) + log_normal(x, v0 + s1);
    const double b = std::log(1.0 - w) + log_normal(x, v0 + s2);
    return 1.0 / (1.0 + std::exp(a - b));
  }
  double density(std::span<const double> x, std::span<const double> theta) const {
    const double pn = narrow_weight(x);
    double out = 0.0;
    for (int c = 0; c < 2; ++c) {
      const double s = c == 0 ? s1 : s2;
      const double shrink = v0 / (v0 + s), var = v0 * s / (v0 + s);
      std::vector<double> r(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) r[j] = theta[j] - shrink * x[j];
      out += (c == 0 ? 1.0 - pn : pn) * std::exp(log_normal(r, var));
    }
    return out;
  }
};

// Kolmogorov–Smirnov distance of a sample from U(0, 1).
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / n - u[i]);
    d = std::max(d, u[i] - static_cast<double>(i) / n);
  }
  return d;
}

// Wilson score interval, direct formula.
inline std::pair<double, double> wilson(double successes, double n, double z) {
  const double p = successes / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
  return {center, half};
}

}  // namespace oracle
