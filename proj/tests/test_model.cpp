#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "zrp/model.hpp"

using namespace zrp;

TEST_CASE("zeta and critical constants against frozen references") {
  CHECK(riemann_zeta(2.0) == doctest::Approx(1.6449340668482264).epsilon(1e-14));
  CHECK(riemann_zeta(4.0) == doctest::Approx(1.0823232337111382).epsilon(1e-14));

  /* independently computed with arbitrary-precision arithmetic and pinned */
  CriticalConstants c3 = critical_constants(3.0);
  CHECK(c3.z_c == doctest::Approx(2.2020569031595942854).epsilon(1e-14));
  CHECK(c3.rho_c == doctest::Approx(0.746998892030452531).epsilon(1e-13));
  CriticalConstants c4 = critical_constants(4.0);
  CHECK(c4.z_c == doctest::Approx(2.0823232337111381915).epsilon(1e-14));
  CHECK(c4.rho_c == doctest::Approx(0.57726720025943135246).epsilon(1e-13));
  CriticalConstants c5 = critical_constants(5.0);
  CHECK(c5.z_c == doctest::Approx(2.0369277551433699263).epsilon(1e-14));
  CHECK(c5.rho_c == doctest::Approx(0.53135082036081268064).epsilon(1e-13));
  CriticalConstants c25 = critical_constants(2.5);
  CHECK(c25.z_c == doctest::Approx(2.3414872572509171798).epsilon(1e-14));
  CHECK(c25.rho_c == doctest::Approx(1.1156906109976503715).epsilon(1e-13));

  CHECK_THROWS(critical_constants(2.0));
}

TEST_CASE("jump rates decrease to 1 and their product telescopes") {
  JumpRateTable t(4.0, 64);
  CHECK(t.g(0) == 0.0);
  CHECK(t.g(1) == 1.0);
  CHECK(t.g(2) == doctest::Approx(16.0).epsilon(1e-15));
  CHECK(t.g(3) == doctest::Approx(std::pow(1.5, 4.0)).epsilon(1e-15));
  for (std::int64_t n = 3; n <= 64; ++n) CHECK(t.g(n) < t.g(n - 1));
  CHECK(t.g(64) > 1.0);
  for (std::int64_t n : {1, 2, 5, 17, 64})
    CHECK(t.log_g_factorial(n) ==
          doctest::Approx(4.0 * std::log(static_cast<double>(n))).epsilon(1e-13));
  CHECK(t.log_g_factorial(0) == 0.0);
}

TEST_CASE("model params derived quantities") {
  ModelParams mp = make_model_params(16, 18, 4.0);
  CHECK(mp.rho == doctest::Approx(18.0 / 16.0));
  CHECK(mp.n_tilde == doctest::Approx(18.0 - 16.0 * 0.57726720025943135246).epsilon(1e-13));
  CHECK(mp.theta == doctest::Approx(std::pow(16.0, 5.0)).epsilon(1e-15));
}

TEST_CASE("well classification at a hand-checked system") {
  /* L=6, N=12, b=4: rho_c*L ~ 3.464, n_tilde ~ 8.536 */
  ModelParams mp = make_model_params(6, 12, 4.0);
  WellPartition wp = explicit_wells(3.0, 2, 3);
  CHECK(well_threshold(mp, wp) == 6);  // ceil(8.536 - 3)
  CHECK(wells_valid(mp, wp));

  Configuration cfg;
  cfg.occ = {1, 9, 0, 1, 0, 1};
  Classification cl = classify(cfg, mp, wp);
  CHECK(cl.kind == Classification::Kind::Well);
  CHECK(cl.site == 1);

  /* background site above beta but within phi: extended only */
  cfg.occ = {3, 8, 0, 1, 0, 0};
  cl = classify(cfg, mp, wp);
  CHECK(cl.kind == Classification::Kind::ExtendedOnly);
  CHECK(cl.site == 1);

  /* background above phi */
  cfg.occ = {4, 7, 0, 1, 0, 0};
  cl = classify(cfg, mp, wp);
  CHECK(cl.kind == Classification::Kind::Outside);

  /* max below the threshold */
  cfg.occ = {2, 5, 2, 1, 1, 1};
  cl = classify(cfg, mp, wp);
  CHECK(cl.kind == Classification::Kind::Outside);

  /* tied maximum is no well even if both clear the threshold */
  cfg.occ = {6, 6, 0, 0, 0, 0};
  cl = classify(cfg, mp, wp);
  CHECK(cl.kind == Classification::Kind::Outside);
}

TEST_CASE("wells_valid rejects overlapping scales") {
  ModelParams mp = make_model_params(6, 12, 4.0);
  /* threshold ceil(8.536-3)=6 must exceed both ceilings */
  CHECK_FALSE(wells_valid(mp, explicit_wells(3.0, 6, 6)));
  CHECK_FALSE(wells_valid(mp, explicit_wells(3.0, 2, 6)));
  CHECK(wells_valid(mp, explicit_wells(3.0, 5, 5)));
  /* alpha so large the threshold hits zero */
  CHECK_FALSE(wells_valid(mp, explicit_wells(9.0, 0, 0)));
}

TEST_CASE("scaling defaults degenerate at small L and recover at larger L") {
  /* alpha = L^(1/2+5/(2b)) = 16^(0.8125) = 9.51 > n_tilde = 8.76 at L=16,b=4 */
  ModelParams small = make_model_params(16, 18, 4.0);
  WellPartition wp = scaling_default_wells(small);
  CHECK(wp.alpha == doctest::Approx(std::pow(16.0, 0.5 + 5.0 / 8.0)).epsilon(1e-14));
  CHECK_FALSE(wells_valid(small, wp));

  /* the default depth margin grows like L^(1/2+5/(2b)), sublinear only for
   * b > 5; at b=7.5, 2x critical density, L=1024 the defaults separate:
   * threshold 194 vs ceilings beta=142, phi=147 */
  ModelParams big = make_model_params(1024, 1033, 7.5);
  WellPartition defaults = scaling_default_wells(big);
  CHECK(defaults.beta == 142);
  CHECK(defaults.phi == 147);
  CHECK(well_threshold(big, defaults) == 194);
  CHECK(wells_valid(big, defaults));
}

TEST_CASE("observe reports the deficit and the location fraction") {
  ModelParams mp = make_model_params(6, 12, 4.0);
  WellPartition wp = explicit_wells(3.0, 2, 3);
  Configuration cfg;
  cfg.occ = {1, 9, 0, 1, 0, 1};
  Observables ob = observe(cfg, mp, wp);
  CHECK(ob.max_value == 9);
  CHECK(ob.max_site == 1);
  CHECK(ob.sites_at_max == 1);
  CHECK(ob.second_max == 1);
  CHECK(ob.condensate_deficit == 3);
  REQUIRE(ob.location_fraction.has_value());
  CHECK(*ob.location_fraction == doctest::Approx(1.0 / 6.0));

  cfg.occ = {2, 2, 2, 2, 2, 2};
  ob = observe(cfg, mp, wp);
  CHECK(ob.sites_at_max == 6);
  CHECK_FALSE(ob.location_fraction.has_value());
}

TEST_CASE("configuration helpers") {
  Configuration c = Configuration::condensate_at(5, 7, 2);
  CHECK(c.size() == 5);
  CHECK(c.total() == 7);
  CHECK(c.occ[2] == 7);
  CHECK(c.occ[0] == 0);
}
