#include "zrp/levy.hpp"

#include <cmath>
#include <stdexcept>

#include "zrp/quad.hpp"

namespace zrp {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double beta_integral(double b) {
  if (!(b > 0.0)) throw std::invalid_argument("beta_integral: needs b > 0");
  return std::exp(2.0 * std::lgamma(b + 1.0) - std::lgamma(2.0 * b + 2.0));
}

double beta_integral_quadrature(double b, double tol) {
  return integrate([b](double x) { return std::pow(x, b) * std::pow(1.0 - x, b); }, 0.0, 1.0,
                   tol, 16);
}

LevyParams make_levy_params(double b, double rho, double eps) {
  if (!(eps > 0.0 && eps <= 0.5))
    throw std::invalid_argument("make_levy_params: cutoff must lie in (0, 1/2]");
  CriticalConstants cc = critical_constants(b);
  if (!(rho > cc.rho_c))
    throw std::invalid_argument("make_levy_params: needs a supercritical density rho > rho_c");
  LevyParams lp;
  lp.b = b;
  lp.rho = rho;
  lp.z_c = cc.z_c;
  lp.rho_c = cc.rho_c;
  lp.I_b = beta_integral(b);
  lp.H = 1.0 / (std::pow(rho - cc.rho_c, 1.0 + b) * cc.z_c * lp.I_b);
  lp.eps = eps;
  return lp;
}

double torus_distance(double v) {
  double u = v - std::floor(v);
  return u * (1.0 - u);
}

double r_torus(double v, const LevyParams& lp) {
  double d = torus_distance(v);
  if (d <= 0.0) throw std::domain_error("r_torus: rate density undefined at the origin");
  return lp.H / d;
}

double levy_total_rate(const LevyParams& lp) {
  return 2.0 * lp.H * std::log((1.0 - lp.eps) / lp.eps);
}

double small_jump_discarded_variance(const LevyParams& lp) { return lp.H * lp.eps * lp.eps; }

double signed_jump(double v) { return v <= 0.5 ? v : v - 1.0; }

std::vector<LevyJump> sample_levy_path(const LevyParams& lp, double t_end, RngStream& rng) {
  std::vector<LevyJump> path;
  double rate = levy_total_rate(lp);
  if (!(rate > 0.0)) return path;  // eps = 1/2 leaves an empty truncation window
  const double hi = std::log((1.0 - lp.eps) / lp.eps);
  const double lo = -hi;
  /* draw order per jump: (interarrival, size); sizes by the exact logistic
   * inverse CDF for the 1/(v(1-v)) density on (eps, 1-eps) */
  double t = rng.exponential(rate);
  while (t < t_end) {
    double u = rng.uniform(lo, hi);
    double v = 1.0 / (1.0 + std::exp(-u));
    path.push_back({t, v});
    t += rng.exponential(rate);
  }
  return path;
}

double path_position(const std::vector<LevyJump>& path, double t, double start) {
  double pos = start;
  for (const auto& j : path) {
    if (j.t > t) break;
    pos += j.v;
  }
  pos -= std::floor(pos);
  return pos;
}

double char_exponent(std::int64_t k, const LevyParams& lp) {
  if (k == 0) return 0.0;
  double kk = static_cast<double>(k < 0 ? -k : k);
  double H = lp.H;
  auto integrand = [kk, H](double y) {
    if (y <= 0.0 || y >= 1.0) return 0.0;
    double s = std::sin(kPi * kk * y);
    return H * 2.0 * s * s / (y * (1.0 - y));  // 1 - cos(2 pi k y) = 2 sin^2(pi k y)
  };
  int panels = static_cast<int>(kk) * 4;
  if (panels < 16) panels = 16;
  return integrate(integrand, 0.0, 1.0, 1e-9, panels);
}

std::int64_t RegularizationScheme::center(std::int64_t m) const {
  return ell_bar + ell + 1 + (2 * ell + 1) * (m - 1);
}

std::pair<std::int64_t, std::int64_t> RegularizationScheme::box(std::int64_t m) const {
  std::int64_t c = center(m);
  return {c - ell, c + ell};
}

RegularizationScheme RegularizationScheme::make(std::int64_t L) {
  std::int64_t ell = std::llround(std::cbrt(static_cast<double>(L)));
  if (ell < 1) ell = 1;
  std::int64_t lbar =
      static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(L), 2.0 / 3.0) - 1e-9));
  while (2 * lbar + 1 + (2 * ell + 1) <= L && (L - (2 * lbar + 1)) % (2 * ell + 1) != 0) ++lbar;
  return make_explicit(L, ell, lbar);
}

RegularizationScheme RegularizationScheme::make_explicit(std::int64_t L, std::int64_t ell,
                                                         std::int64_t ell_bar) {
  if (ell < 1 || ell_bar < ell) throw std::invalid_argument("regularization: needs ell_bar >= ell >= 1");
  std::int64_t rest = L - (2 * ell_bar + 1);
  if (rest < 2 * ell + 1 || rest % (2 * ell + 1) != 0)
    throw std::invalid_argument("regularization: boxes of size 2*ell+1 cannot tile the ring remainder");
  RegularizationScheme s;
  s.L = L;
  s.ell = ell;
  s.ell_bar = ell_bar;
  s.M_bar = rest / (2 * ell + 1);
  return s;
}

std::vector<double> proxy_hop_rates(const LevyParams& lp, std::int64_t L) {
  std::vector<double> r(static_cast<std::size_t>(L), 0.0);
  for (std::int64_t z = 1; z < L; ++z)
    r[static_cast<std::size_t>(z)] =
        lp.H * (1.0 / static_cast<double>(z) + 1.0 / static_cast<double>(L - z));
  return r;
}

namespace {

/* limit generator applied to f at u, by quadrature of the symmetrized
 * increment (finite integrand, zero at both endpoints) */
double limit_generator(const std::function<double(double)>& f, double u, const LevyParams& lp) {
  double fu = f(u);
  double H = lp.H;
  auto integrand = [&](double y) {
    if (y <= 0.0) return 0.0;
    double up = u + y - std::floor(u + y);
    double dn = u - y - std::floor(u - y);
    return H * (f(up) + f(dn) - 2.0 * fu) / (y * (1.0 - y));
  };
  return integrate(integrand, 0.0, 0.5, 1e-10, 64);
}

}  // namespace

GeneratorCompareResult regularized_generator_compare(std::span<const double> theta_rates,
                                                     const std::function<double(double)>& f,
                                                     const RegularizationScheme& scheme,
                                                     const LevyParams& lp) {
  const std::int64_t L = scheme.L;
  if (static_cast<std::int64_t>(theta_rates.size()) != L)
    throw std::invalid_argument("regularized_generator_compare: rate table size must equal L");
  const std::int64_t ell = scheme.ell, lbar = scheme.ell_bar, Mbar = scheme.M_bar;
  const double width = static_cast<double>(2 * ell + 1);

  auto rate_at = [&](std::int64_t d) {
    std::int64_t z = ((d % L) + L) % L;
    return z == 0 ? 0.0 : theta_rates[static_cast<std::size_t>(z)];
  };

  /* The generator from site x is evaluated with the start averaged over the
   * width-(2 ell + 1) box at x and targets grouped into the central window
   * (half-width ell_bar) plus the tiling boxes; the f increment is split at
   * box centers. Grouping (start offset y, target z) pairs by ring
   * displacement makes each piece an O(L) convolution. */
  std::vector<double> coef_central(static_cast<std::size_t>(L), 0.0);
  for (std::int64_t d = -lbar - ell; d <= lbar + ell; ++d) {
    /* pairs y in [-ell, ell], z in [-lbar, lbar] with z - y = d */
    std::int64_t n_pairs = std::min(ell, lbar - d) - std::max(-ell, -lbar - d) + 1;
    if (n_pairs <= 0) continue;
    std::int64_t z = ((d % L) + L) % L;
    coef_central[static_cast<std::size_t>(z)] += (static_cast<double>(n_pairs) / width) * rate_at(d);
  }
  std::vector<double> coef_boxes(static_cast<std::size_t>(L), 0.0);
  std::vector<double> box_rate(static_cast<std::size_t>(Mbar + 1), 0.0);
  for (std::int64_t m = 1; m <= Mbar; ++m) {
    std::int64_t c = scheme.center(m);
    double rb = 0.0;
    for (std::int64_t d = c - 2 * ell; d <= c + 2 * ell; ++d) {
      std::int64_t overlap = 2 * ell + 1 - std::llabs(d - c);
      if (overlap <= 0) continue;
      double w = (static_cast<double>(overlap) / width) * rate_at(d);
      std::int64_t z = ((d % L) + L) % L;
      coef_boxes[static_cast<std::size_t>(z)] += w;
      rb += w;
    }
    box_rate[static_cast<std::size_t>(m)] = rb;
  }

  std::vector<double> F(static_cast<std::size_t>(L));
  for (std::int64_t i = 0; i < L; ++i)
    F[static_cast<std::size_t>(i)] = f(static_cast<double>(i) / static_cast<double>(L));

  GeneratorCompareResult res;
  res.per_x_error.resize(static_cast<std::size_t>(L));
  for (std::int64_t x = 0; x < L; ++x) {
    double fx = F[static_cast<std::size_t>(x)];
    double central = 0.0, box_var = 0.0, box_main = 0.0, direct = 0.0;
    for (std::int64_t z = 1; z < L; ++z) {
      double fz = F[static_cast<std::size_t>((x + z) % L)];
      central += coef_central[static_cast<std::size_t>(z)] * (fz - fx);
      box_var += coef_boxes[static_cast<std::size_t>(z)] * fz;
      direct += theta_rates[static_cast<std::size_t>(z)] * (fz - fx);
    }
    for (std::int64_t m = 1; m <= Mbar; ++m) {
      double fc = F[static_cast<std::size_t>((x + scheme.center(m)) % L)];
      box_var -= box_rate[static_cast<std::size_t>(m)] * fc;
      box_main += box_rate[static_cast<std::size_t>(m)] * (fc - fx);
    }
    double value = central + box_var + box_main;
    double defect = std::fabs(value - direct);
    if (defect > res.identity_defect) res.identity_defect = defect;
    double err = std::fabs(value - limit_generator(f, static_cast<double>(x) / static_cast<double>(L), lp));
    res.per_x_error[static_cast<std::size_t>(x)] = err;
    if (err > res.sup_error) res.sup_error = err;
  }
  return res;
}

}  // namespace zrp
