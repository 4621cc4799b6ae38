#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace zrp {

struct RunningStat {
  std::int64_t n = 0;
  double mean = 0.0, m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double sem() const { return n > 0 ? stddev() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

/* regularized upper incomplete gamma Q(a,x) = Gamma(a,x)/Gamma(a) */
double regularized_gamma_q(double a, double x);

inline double chi_square_sf(double x, int dof) {
  if (dof <= 0) throw std::invalid_argument("chi_square_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

struct ChiSquareResult {
  double stat = 0.0;
  int dof = 0;
  double pvalue = 1.0;
  int pooled_cells = 0;  // cells merged into the final pooled bin
};

/* Pearson goodness of fit.  Cells whose expected count falls below
 * min_expected are pooled into a single cell before the statistic is
 * formed, which keeps the chi-square approximation honest for long thin
 * tails.  dof = (#effective cells) - 1 - extra_constraints. */
ChiSquareResult chi_square_test(std::span<const double> observed,
                                std::span<const double> expected,
                                double min_expected = 5.0, int extra_constraints = 0);

/* exact two-sided sign test: X ~ Binomial(n, 1/2), returns P over the
 * symmetric rejection region containing k */
double binom_two_sided_p(std::int64_t k, std::int64_t n);

/* Kolmogorov limit distribution survival function */
double kolmogorov_sf(double lambda);

struct KsResult {
  double d = 0.0;
  double pvalue = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct Interval {
  double lo = 0.0, hi = 1.0;
};
/* Wilson score interval for a binomial proportion at z sigmas */
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z);

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

inline double log_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -INFINITY;
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace zrp
