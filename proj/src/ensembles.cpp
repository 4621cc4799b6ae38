#include "zrp/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace zrp {

CriticalMarginal CriticalMarginal::make(double b, std::int64_t n_max) {
  if (n_max < 0) throw std::invalid_argument("CriticalMarginal: n_max must be nonnegative");
  CriticalConstants c = critical_constants(b);
  CriticalMarginal m;
  m.b = b;
  m.z_c = c.z_c;
  m.pmf.resize(static_cast<std::size_t>(n_max) + 1);
  m.pmf[0] = 1.0 / c.z_c;
  double head = 0.0;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    double t = std::pow(static_cast<double>(n), -b);
    m.pmf[static_cast<std::size_t>(n)] = t / c.z_c;
    head += t;
  }
  /* zeta(b) - head is the exact un-truncated tail */
  m.tail_mass = (riemann_zeta(b) - head) / c.z_c;
  if (m.tail_mass < 0.0) m.tail_mass = 0.0;
  return m;
}

double ConvolutionTable::log_prob(std::int64_t k, std::int64_t m) const {
  double e = entry(k, m);
  if (e <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(e) + log_scale_[static_cast<std::size_t>(k - 1)];
}

double ConvolutionTable::prob(std::int64_t k, std::int64_t m) const {
  double lp = log_prob(k, m);
  return std::isfinite(lp) ? std::exp(lp) : 0.0;
}

double ConvolutionTable::entry(std::int64_t k, std::int64_t m) const {
  if (k < 1 || k > num_rows()) throw std::out_of_range("ConvolutionTable: row out of range");
  if (m < 0 || m > max_sum_) return 0.0;
  return rows_[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(m)];
}

double ConvolutionTable::row_log_scale(std::int64_t k) const {
  if (k < 1 || k > num_rows()) throw std::out_of_range("ConvolutionTable: row out of range");
  return log_scale_[static_cast<std::size_t>(k - 1)];
}

ConvolutionTable build_convolution(const CriticalMarginal& marginal, std::int64_t L,
                                   std::int64_t N, std::int64_t max_occupation,
                                   std::int64_t budget) {
  if (L < 1 || N < 0) throw std::invalid_argument("build_convolution: bad L or N");
  if (marginal.n_max() < std::min(N, max_occupation < 0 ? N : max_occupation))
    throw std::invalid_argument("build_convolution: marginal truncated below the requested cap");
  if (L * (N + 1) > budget)
    throw std::length_error("build_convolution: table exceeds entry budget, raise it explicitly");

  std::int64_t cap = max_occupation < 0 ? N : std::min(max_occupation, N);
  ConvolutionTable t;
  t.max_sum_ = N;
  t.cap_ = cap;
  t.rows_.resize(static_cast<std::size_t>(L));
  t.log_scale_.resize(static_cast<std::size_t>(L));

  std::vector<double> base(static_cast<std::size_t>(N) + 1, 0.0);
  for (std::int64_t n = 0; n <= cap; ++n)
    base[static_cast<std::size_t>(n)] = marginal.pmf[static_cast<std::size_t>(n)];

  auto rescale = [](std::vector<double>& row) -> double {
    double mx = 0.0;
    for (double v : row) mx = std::max(mx, v);
    if (mx <= 0.0) return 0.0;  // impossible row (cap too tight); keep zeros
    for (double& v : row) v /= mx;
    return std::log(mx);
  };

  t.rows_[0] = base;
  t.log_scale_[0] = rescale(t.rows_[0]);

  for (std::int64_t k = 2; k <= L; ++k) {
    const auto& prev = t.rows_[static_cast<std::size_t>(k - 2)];
    std::vector<double> row(static_cast<std::size_t>(N) + 1, 0.0);
    for (std::int64_t m = 0; m <= N; ++m) {
      double acc = 0.0;
      std::int64_t j_max = std::min(cap, m);
      for (std::int64_t j = 0; j <= j_max; ++j)
        acc += base[static_cast<std::size_t>(j)] * prev[static_cast<std::size_t>(m - j)];
      row[static_cast<std::size_t>(m)] = acc;
    }
    double ls = rescale(row);
    t.rows_[static_cast<std::size_t>(k - 1)] = std::move(row);
    t.log_scale_[static_cast<std::size_t>(k - 1)] =
        t.log_scale_[static_cast<std::size_t>(k - 2)] + ls;
  }
  return t;
}

double log_partition_function(const ConvolutionTable& table, std::int64_t L, std::int64_t N,
                              double z_c) {
  double lp = table.log_prob(L, N);
  if (!std::isfinite(lp))
    throw std::runtime_error("log_partition_function: requested total has zero mass");
  return static_cast<double>(L) * std::log(z_c) + lp;
}

Configuration sample_canonical(const CriticalMarginal& marginal, const ConvolutionTable& table,
                               std::int64_t L, std::int64_t N, RngStream& rng) {
  if (table.num_rows() < L || table.max_sum() < N)
    throw std::invalid_argument("sample_canonical: table too small for (L,N)");
  Configuration cfg;
  cfg.occ.assign(static_cast<std::size_t>(L), 0);
  std::int64_t remaining = N;
  std::int64_t cap = table.max_occupation();
  for (std::int64_t i = 0; i < L - 1; ++i) {
    std::int64_t rest = L - 1 - i;  // sites after this one
    std::int64_t hi = std::min(cap, remaining);
    /* weights share the row scale factor, so it cancels */
    double total = 0.0;
    for (std::int64_t n = 0; n <= hi; ++n)
      total += marginal.pmf[static_cast<std::size_t>(n)] * table.entry(rest, remaining - n);
    if (!(total > 0.0))
      throw std::runtime_error("sample_canonical: conditional has no mass, impossible state");
    double u = rng.uniform() * total;
    std::int64_t pick = hi;
    double acc = 0.0;
    for (std::int64_t n = 0; n <= hi; ++n) {
      acc += marginal.pmf[static_cast<std::size_t>(n)] * table.entry(rest, remaining - n);
      if (u <= acc) {
        pick = n;
        break;
      }
    }
    cfg.occ[static_cast<std::size_t>(i)] = pick;
    remaining -= pick;
  }
  if (remaining > cap)
    throw std::runtime_error("sample_canonical: leftover exceeds cap, impossible state");
  cfg.occ[static_cast<std::size_t>(L - 1)] = remaining;
  return cfg;
}

namespace {
/* log(sum of exp(terms)) with the usual max shift; empty -> -inf */
double log_sum_exp(const std::vector<double>& terms) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double t : terms) mx = std::max(mx, t);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}
}  // namespace

DeltaMass delta_mass_exact(const ModelParams& mp, const WellPartition& wp, std::int64_t budget) {
  std::int64_t t = well_threshold(mp, wp);
  DeltaMass dm;
  if (t <= 0 && wp.beta >= mp.N) {
    /* every configuration is inside some well */
    dm.well_mass = 1.0;
    return dm;
  }
  if (t <= wp.beta)
    throw std::invalid_argument(
        "delta_mass_exact: wells overlap (threshold <= beta); exact split undefined");

  CriticalMarginal marginal = CriticalMarginal::make(mp.b, mp.N);
  ConvolutionTable full = build_convolution(marginal, mp.L, mp.N, -1, budget);
  double log_pLN = full.log_prob(mp.L, mp.N);
  if (!std::isfinite(log_pLN)) throw std::runtime_error("delta_mass_exact: zero-mass system");

  /* P[M_L <= t-1]: cap every site at t-1 */
  if (t - 1 >= 0) {
    ConvolutionTable low = build_convolution(marginal, mp.L, mp.N, t - 1, budget);
    double lp = low.log_prob(mp.L, mp.N);
    dm.below_threshold = std::isfinite(lp) ? std::exp(lp - log_pLN) : 0.0;
  }

  /* union of wells: condensate site k >= t (then automatically the unique
   * maximum since beta < t), remaining L-1 sites capped at beta */
  double well = 0.0;
  if (mp.L >= 2) {
    ConvolutionTable bulk = build_convolution(marginal, mp.L - 1, mp.N, wp.beta, budget);
    std::vector<double> terms;
    for (std::int64_t k = t; k <= mp.N; ++k) {
      double lb = bulk.log_prob(mp.L - 1, mp.N - k);
      if (!std::isfinite(lb)) continue;
      terms.push_back(std::log(marginal.pmf[static_cast<std::size_t>(k)]) + lb);
    }
    double ls = log_sum_exp(terms);
    if (std::isfinite(ls))
      well = std::exp(std::log(static_cast<double>(mp.L)) + ls - log_pLN);
  } else {
    well = (mp.N >= t) ? 1.0 : 0.0;
  }
  dm.well_mass = well;
  dm.total = 1.0 - well;
  if (dm.total < 0.0 && dm.total > -1e-12) dm.total = 0.0;
  dm.bulk_violation = dm.total - dm.below_threshold;
  if (dm.bulk_violation < 0.0 && dm.bulk_violation > -1e-12) dm.bulk_violation = 0.0;
  return dm;
}

double marginal_second_moment(double b) {
  if (!(b > 3.0))
    throw std::invalid_argument("marginal_second_moment: needs b > 3 for convergence");
  CriticalConstants c = critical_constants(b);
  return riemann_zeta(b - 2.0) / c.z_c;
}

TailDeviation tail_deviation_exact(std::int64_t A_size, double m, const ModelParams& mp,
                                   std::int64_t budget) {
  if (A_size < 1 || A_size >= mp.L)
    throw std::invalid_argument("tail_deviation_exact: block must be a proper sublattice");
  CriticalMarginal marginal = CriticalMarginal::make(mp.b, mp.N);
  ConvolutionTable table = build_convolution(marginal, mp.L, mp.N, -1, budget);
  double log_pLN = table.log_prob(mp.L, mp.N);
  if (!std::isfinite(log_pLN)) throw std::runtime_error("tail_deviation_exact: zero-mass system");

  double a = static_cast<double>(A_size);
  /* sum over the block <= rho_c*|A| - m, block total is an integer */
  std::int64_t K = static_cast<std::int64_t>(std::floor(mp.rho_c * a - m));
  TailDeviation td;
  td.v = 2.0 * marginal_second_moment(mp.b);
  td.lambda = -2.0 * m / (td.v * a);

  if (K >= 0) {
    std::vector<double> terms;
    for (std::int64_t k = 0; k <= std::min(K, mp.N); ++k) {
      double la = table.log_prob(A_size, k);
      double lb = table.log_prob(mp.L - A_size, mp.N - k);
      if (std::isfinite(la) && std::isfinite(lb)) terms.push_back(la + lb);
    }
    double ls = log_sum_exp(terms);
    td.prob = std::isfinite(ls) ? std::exp(ls - log_pLN) : 0.0;
  }

  /* exponential-moment bound P[X <= -m] <= exp(lambda m) E[e^{lambda X}],
   * lambda < 0, X = block sum centered at rho_c per site.  The truncated
   * pmf under-counts the moment, so the discarded tail is bounded from
   * above by its largest factor and added back. */
  double lam = td.lambda;
  double mgf = 0.0;
  for (std::int64_t n = 0; n <= marginal.n_max(); ++n)
    mgf += marginal.pmf[static_cast<std::size_t>(n)] *
           std::exp(lam * (static_cast<double>(n) - mp.rho_c));
  mgf += marginal.tail_mass *
         std::exp(lam * (static_cast<double>(marginal.n_max() + 1) - mp.rho_c));
  td.chernoff = std::exp(lam * m + a * std::log(mgf));
  return td;
}

void ConvolutionTable::write_csv(std::ostream& os) const {
  os << "k,m,value,row_exponent\n";
  char buf[128];
  for (std::int64_t k = 1; k <= num_rows(); ++k) {
    double ls = log_scale_[static_cast<std::size_t>(k - 1)];
    for (std::int64_t m = 0; m <= max_sum_; ++m) {
      double v = rows_[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(m)];
      if (v == 0.0 && m > 0) continue;  // sparse output, zeros omitted
      std::snprintf(buf, sizeof buf, "%lld,%lld,%.17g,%.17g", static_cast<long long>(k),
                    static_cast<long long>(m), v, ls);
      os << buf << '\n';
    }
  }
}

}  // namespace zrp
