#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zrp {

/* Zero-range dynamics on the periodic lattice {0..L-1}: a particle leaves
 * site x at rate g(n) depending only on the occupation n = eta_x and moves
 * to x-1 or x+1 with probability 1/2 each.  The decreasing rate family used
 * throughout is g(1) = 1, g(n) = (n/(n-1))^b for n >= 2, so the product
 * g(1)...g(n) telescopes to n^b. */

struct CriticalConstants {
  double z_c = 0.0;   // normalization of the critical single-site law
  double rho_c = 0.0; // its mean occupation
};

/* Riemann zeta for s > 1 via Euler-Maclaurin; absolute error below 1e-15
 * for the s >= 1.5 range used here. */
double riemann_zeta(double s);

/* Requires b > 2 so the mean converges: z_c = 1 + zeta(b),
 * rho_c = zeta(b-1)/z_c. */
CriticalConstants critical_constants(double b);

struct ModelParams {
  std::int64_t L = 0;
  std::int64_t N = 0;
  double b = 0.0;
  double z_c = 0.0;
  double rho_c = 0.0;
  double rho = 0.0;      // N/L
  double n_tilde = 0.0;  // N - rho_c*L, the typical condensate size
  double theta = 0.0;    // L^(1+b), the condensate relocation time scale
};

ModelParams make_model_params(std::int64_t L, std::int64_t N, double b);

class JumpRateTable {
 public:
  JumpRateTable(double b, std::int64_t n_max);
  double g(std::int64_t n) const;
  /* log of the telescoped product g(1)...g(n) = n^b */
  double log_g_factorial(std::int64_t n) const;
  double exponent() const { return b_; }

 private:
  double b_;
  std::vector<double> tab_;
};

struct Configuration {
  std::vector<std::int64_t> occ;

  std::int64_t size() const { return static_cast<std::int64_t>(occ.size()); }
  std::int64_t total() const;
  /* all mass at one site */
  static Configuration condensate_at(std::int64_t L, std::int64_t N, std::int64_t x);
};

/* Metastable wells.  A configuration is in well x when site x carries the
 * unique maximum, that maximum clears N - rho_c L - alpha, and every other
 * site holds at most beta particles.  The extended well relaxes the bulk
 * bound to phi and drops nothing else; it is what the exit probes watch. */
enum class WellMode { Explicit, ScalingDefaults };

struct WellPartition {
  WellMode mode = WellMode::Explicit;
  double alpha = 0.0;
  std::int64_t beta = 0;
  std::int64_t phi = 0;
};

/* alpha = L^(1/2 + 5/(2b)), beta = 2*floor(L^(4/(b-1))), phi = floor(L/log L);
 * these are the asymptotic choices and can degenerate at small L (alpha can
 * exceed the condensate size), which callers must check via wells_valid. */
WellPartition scaling_default_wells(const ModelParams& mp);
WellPartition explicit_wells(double alpha, std::int64_t beta, std::int64_t phi);

/* smallest admissible condensate occupation, ceil(N - rho_c L - alpha) */
std::int64_t well_threshold(const ModelParams& mp, const WellPartition& wp);

/* true when threshold > max(beta, phi) so wells are pairwise disjoint and
 * the condensate site is unambiguous */
bool wells_valid(const ModelParams& mp, const WellPartition& wp);

struct Classification {
  enum class Kind { Well, ExtendedOnly, Outside };
  Kind kind = Kind::Outside;
  std::int64_t site = -1;  // condensate location for Well/ExtendedOnly
};

Classification classify(const Configuration& cfg, const ModelParams& mp,
                        const WellPartition& wp);

struct Observables {
  std::int64_t max_value = 0;
  std::int64_t max_site = -1;
  std::int64_t sites_at_max = 0;
  std::int64_t second_max = 0;
  std::int64_t condensate_deficit = 0;        // N - max_value
  std::optional<double> location_fraction;    // site/L when in a well or extended well
};

Observables observe(const Configuration& cfg, const ModelParams& mp, const WellPartition& wp);

}  // namespace zrp
