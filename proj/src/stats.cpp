#include "zrp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zrp {

namespace {

/* lower regularized gamma by series, valid for x < a+1 */
double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gamma_p_series: no convergence");
}

/* upper regularized gamma by Lentz continued fraction, valid for x >= a+1 */
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw std::runtime_error("gamma_q_cf: no convergence");
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("regularized_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

ChiSquareResult chi_square_test(std::span<const double> observed,
                                std::span<const double> expected, double min_expected,
                                int extra_constraints) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_test: size mismatch");
  double stat = 0.0;
  double pool_obs = 0.0, pool_exp = 0.0;
  int cells = 0, pooled = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < 0.0) throw std::invalid_argument("chi_square_test: negative expectation");
    if (expected[i] < min_expected) {
      pool_obs += observed[i];
      pool_exp += expected[i];
      ++pooled;
    } else {
      double d = observed[i] - expected[i];
      stat += d * d / expected[i];
      ++cells;
    }
  }
  if (pool_exp > 0.0) {
    double d = pool_obs - pool_exp;
    stat += d * d / pool_exp;
    ++cells;
  }
  ChiSquareResult r;
  r.stat = stat;
  r.pooled_cells = pooled;
  r.dof = cells - 1 - extra_constraints;
  if (r.dof < 1) throw std::runtime_error("chi_square_test: not enough cells");
  r.pvalue = chi_square_sf(stat, r.dof);
  return r;
}

double binom_two_sided_p(std::int64_t k, std::int64_t n) {
  if (n <= 0 || k < 0 || k > n) throw std::invalid_argument("binom_two_sided_p: bad arguments");
  std::int64_t lo = std::min(k, n - k);
  /* symmetric pmf at p=1/2: two-sided region is {<= lo} U {>= n-lo} */
  if (2 * lo >= n) return 1.0;
  double log2n = static_cast<double>(n) * std::log(2.0);
  double sum = 0.0;
  for (std::int64_t j = 0; j <= lo; ++j) sum += std::exp(log_binomial(n, j) - log2n);
  return std::min(1.0, 2.0 * sum);
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    /* theta-transformed series, fast for small lambda */
    double pre = std::sqrt(2.0 * M_PI) / lambda;
    double sum = 0.0;
    for (int j = 1; j <= 20; ++j) {
      double t = (2 * j - 1) * M_PI / (2.0 * std::sqrt(2.0) * lambda);
      double term = std::exp(-t * t);
      sum += term;
      if (term < 1e-18 * (sum + 1e-300)) break;
    }
    return 1.0 - pre * sum;
  }
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    double xa = a[i], xb = b[j];
    if (xa <= xb) ++i;
    if (xb <= xa) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  double ne = na * nb / (na + nb);
  double sq = std::sqrt(ne);
  KsResult r;
  r.d = d;
  r.pvalue = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: bad input");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate x");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0 || successes < 0 || successes > trials)
    throw std::invalid_argument("wilson_interval: bad arguments");
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace zrp
