#include "zrp/model.hpp"

#include <cmath>
#include <stdexcept>

namespace zrp {

double riemann_zeta(double s) {
  if (!(s > 1.0)) throw std::invalid_argument("riemann_zeta: needs s > 1");
  const int M = 2000;
  double sum = 0.0;
  for (int n = M; n >= 1; --n) sum += std::pow(static_cast<double>(n), -s);
  /* Euler-Maclaurin tail at M: integral + half term + Bernoulli corrections.
   * Remainder is O(M^(-s-5)), far below double precision at M = 2000. */
  double m = static_cast<double>(M);
  double tail = std::pow(m, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(m, -s) +
                s * std::pow(m, -s - 1.0) / 12.0 -
                s * (s + 1.0) * (s + 2.0) * std::pow(m, -s - 3.0) / 720.0 +
                s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * std::pow(m, -s - 5.0) / 30240.0;
  return sum + tail;
}

CriticalConstants critical_constants(double b) {
  if (!(b > 2.0)) throw std::invalid_argument("critical_constants: needs b > 2");
  CriticalConstants c;
  c.z_c = 1.0 + riemann_zeta(b);
  c.rho_c = riemann_zeta(b - 1.0) / c.z_c;
  return c;
}

ModelParams make_model_params(std::int64_t L, std::int64_t N, double b) {
  if (L < 2) throw std::invalid_argument("make_model_params: L must be at least 2");
  if (N < 0) throw std::invalid_argument("make_model_params: N must be nonnegative");
  CriticalConstants c = critical_constants(b);
  ModelParams mp;
  mp.L = L;
  mp.N = N;
  mp.b = b;
  mp.z_c = c.z_c;
  mp.rho_c = c.rho_c;
  mp.rho = static_cast<double>(N) / static_cast<double>(L);
  mp.n_tilde = static_cast<double>(N) - c.rho_c * static_cast<double>(L);
  mp.theta = std::pow(static_cast<double>(L), 1.0 + b);
  return mp;
}

JumpRateTable::JumpRateTable(double b, std::int64_t n_max) : b_(b) {
  if (n_max < 1) n_max = 1;
  tab_.resize(static_cast<std::size_t>(n_max) + 1);
  tab_[0] = 0.0;
  tab_[1] = 1.0;
  for (std::int64_t n = 2; n <= n_max; ++n)
    tab_[static_cast<std::size_t>(n)] =
        std::pow(static_cast<double>(n) / static_cast<double>(n - 1), b);
}

double JumpRateTable::g(std::int64_t n) const {
  if (n < 0) throw std::invalid_argument("JumpRateTable::g: negative occupation");
  if (n < static_cast<std::int64_t>(tab_.size())) return tab_[static_cast<std::size_t>(n)];
  return std::pow(static_cast<double>(n) / static_cast<double>(n - 1), b_);
}

double JumpRateTable::log_g_factorial(std::int64_t n) const {
  if (n < 0) throw std::invalid_argument("JumpRateTable::log_g_factorial: negative occupation");
  if (n <= 1) return 0.0;
  return b_ * std::log(static_cast<double>(n));
}

std::int64_t Configuration::total() const {
  std::int64_t s = 0;
  for (auto v : occ) s += v;
  return s;
}

Configuration Configuration::condensate_at(std::int64_t L, std::int64_t N, std::int64_t x) {
  Configuration c;
  c.occ.assign(static_cast<std::size_t>(L), 0);
  c.occ[static_cast<std::size_t>(x)] = N;
  return c;
}

WellPartition scaling_default_wells(const ModelParams& mp) {
  WellPartition wp;
  wp.mode = WellMode::ScalingDefaults;
  double L = static_cast<double>(mp.L);
  wp.alpha = std::pow(L, 0.5 + 2.5 / mp.b);
  wp.beta = 2 * static_cast<std::int64_t>(std::floor(std::pow(L, 4.0 / (mp.b - 1.0))));
  wp.phi = static_cast<std::int64_t>(std::floor(L / std::log(L)));
  return wp;
}

WellPartition explicit_wells(double alpha, std::int64_t beta, std::int64_t phi) {
  if (alpha < 0.0 || beta < 0 || phi < beta)
    throw std::invalid_argument("explicit_wells: need alpha >= 0 and phi >= beta >= 0");
  WellPartition wp;
  wp.mode = WellMode::Explicit;
  wp.alpha = alpha;
  wp.beta = beta;
  wp.phi = phi;
  return wp;
}

std::int64_t well_threshold(const ModelParams& mp, const WellPartition& wp) {
  return static_cast<std::int64_t>(std::ceil(mp.n_tilde - wp.alpha));
}

bool wells_valid(const ModelParams& mp, const WellPartition& wp) {
  std::int64_t t = well_threshold(mp, wp);
  return t > wp.beta && t > wp.phi && t >= 1;
}

namespace {
struct MaxInfo {
  std::int64_t max_value = 0, max_site = -1, sites_at_max = 0, second_max = 0;
};

MaxInfo scan(const Configuration& cfg) {
  MaxInfo m;
  for (std::int64_t x = 0; x < cfg.size(); ++x) {
    std::int64_t v = cfg.occ[static_cast<std::size_t>(x)];
    if (v > m.max_value || m.max_site < 0) {
      m.second_max = m.max_site < 0 ? 0 : m.max_value;
      m.max_value = v;
      m.max_site = x;
      m.sites_at_max = 1;
    } else if (v == m.max_value) {
      ++m.sites_at_max;
      m.second_max = v;
    } else if (v > m.second_max) {
      m.second_max = v;
    }
  }
  return m;
}
}  // namespace

Classification classify(const Configuration& cfg, const ModelParams& mp,
                        const WellPartition& wp) {
  if (!wells_valid(mp, wp))
    throw std::logic_error("classify: well partition is degenerate for these parameters");
  MaxInfo m = scan(cfg);
  std::int64_t t = well_threshold(mp, wp);
  Classification c;
  if (m.max_value >= t && m.second_max <= wp.beta) {
    c.kind = Classification::Kind::Well;
    c.site = m.max_site;
  } else if (m.max_value >= t && m.second_max <= wp.phi) {
    c.kind = Classification::Kind::ExtendedOnly;
    c.site = m.max_site;
  } else {
    c.kind = Classification::Kind::Outside;
    c.site = -1;
  }
  return c;
}

Observables observe(const Configuration& cfg, const ModelParams& mp, const WellPartition& wp) {
  MaxInfo m = scan(cfg);
  Observables o;
  o.max_value = m.max_value;
  o.max_site = m.max_site;
  o.sites_at_max = m.sites_at_max;
  o.second_max = m.second_max;
  o.condensate_deficit = mp.N - m.max_value;
  Classification c = classify(cfg, mp, wp);
  if (c.kind != Classification::Kind::Outside)
    o.location_fraction = static_cast<double>(c.site) / static_cast<double>(mp.L);
  return o;
}

}  // namespace zrp
