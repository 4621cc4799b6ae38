#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "zrp/model.hpp"
#include "zrp/rng.hpp"

namespace zrp {

/* Limiting condensate-location jump process on the unit torus.
 *
 * The jump rate density from u to u+v is H / (|v|(1-|v|)), where H depends
 * only on the tail exponent b and the supercritical density rho. Paths are
 * sampled exactly outside a small-jump cutoff eps; the discarded part is
 * symmetric with variance H*eps^2. */
struct LevyParams {
  double b = 0.0;
  double rho = 0.0;
  double z_c = 0.0;
  double rho_c = 0.0;
  double I_b = 0.0;  // Gamma(b+1)^2 / Gamma(2b+2)
  double H = 0.0;    // 1 / ((rho - rho_c)^(1+b) * z_c * I_b)
  double eps = 1e-4; // small-jump cutoff, in (0, 1/2]
};

/* I_b = Gamma(b+1)^2/Gamma(2b+2) = integral of x^b (1-x)^b over [0,1] */
double beta_integral(double b);
double beta_integral_quadrature(double b, double tol = 1e-12);

/* needs b > 2 and rho > rho_c(b); eps in (0, 1/2] */
LevyParams make_levy_params(double b, double rho, double eps = 1e-4);

/* d(0,v) = |v|(1-|v|) on the unit torus; v is reduced mod 1 */
double torus_distance(double v);

/* jump rate density H/d(0,v); domain error at v = 0 (mod 1) */
double r_torus(double v, const LevyParams& lp);

/* total rate of jumps with size in (eps, 1-eps): 2H log((1-eps)/eps) */
double levy_total_rate(const LevyParams& lp);

/* variance of the discarded small-jump part: H*eps^2 */
double small_jump_discarded_variance(const LevyParams& lp);

struct LevyJump {
  double t = 0.0;
  double v = 0.0;  // jump size as a torus point in (eps, 1-eps)
};

/* signed representative of a torus jump: v for v <= 1/2, v-1 otherwise */
double signed_jump(double v);

/* Poisson jump times at rate levy_total_rate; sizes by the exact logistic
 * inverse CDF for the 1/(v(1-v)) density restricted to (eps, 1-eps) */
std::vector<LevyJump> sample_levy_path(const LevyParams& lp, double t_end, RngStream& rng);

/* position at time t of the path started at `start`, reduced mod 1 */
double path_position(const std::vector<LevyJump>& path, double t, double start = 0.0);

/* characteristic exponent psi(k) = H * int (1-cos(2 pi k y))/(y(1-y)) dy,
 * adaptive quadrature, absolute tolerance 1e-8 for |k| <= 64 */
double char_exponent(std::int64_t k, const LevyParams& lp);

/* Box partition of the ring used to compare microscopic hop rates against
 * the limiting generator: a central window of half-width ell_bar around the
 * starting site plus M_bar boxes of size 2*ell+1 tiling the rest, requiring
 * L = (2*ell_bar+1) + M_bar*(2*ell+1) exactly. */
struct RegularizationScheme {
  std::int64_t L = 0;
  std::int64_t ell = 0;
  std::int64_t ell_bar = 0;
  std::int64_t M_bar = 0;

  /* displacement at the center of box m, m = 1..M_bar */
  std::int64_t center(std::int64_t m) const;
  /* inclusive displacement range of box m */
  std::pair<std::int64_t, std::int64_t> box(std::int64_t m) const;

  /* default scales: ell = round(L^(1/3)), ell_bar = smallest value >=
   * L^(2/3) making the tiling exact */
  static RegularizationScheme make(std::int64_t L);
  /* explicit scales; throws unless the tiling identity holds */
  static RegularizationScheme make_explicit(std::int64_t L, std::int64_t ell,
                                            std::int64_t ell_bar);
};

/* closed-form proxy for the rescaled condensate hop rates:
 * theta_L * r(0 -> z) = H * (1/z + 1/(L-z)); index z = 1..L-1, entry 0 is 0 */
std::vector<double> proxy_hop_rates(const LevyParams& lp, std::int64_t L);

struct GeneratorCompareResult {
  double sup_error = 0.0;            // sup_x |box-averaged generator - limit|
  std::vector<double> per_x_error;   // size L
  double identity_defect = 0.0;      // max_x |box decomposition - direct sum|
};

/* Applies the rescaled microscopic generator to f at every site x/L via the
 * central-window + box-average splitting, and compares against the limit
 * generator evaluated by quadrature. theta_rates[z] must hold
 * theta_L*r(0->z) for z = 1..L-1. */
GeneratorCompareResult regularized_generator_compare(std::span<const double> theta_rates,
                                                     const std::function<double(double)>& f,
                                                     const RegularizationScheme& scheme,
                                                     const LevyParams& lp);

}  // namespace zrp
