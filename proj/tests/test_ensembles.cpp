#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "zrp/ensembles.hpp"
#include "zrp/model.hpp"
#include "zrp/rng.hpp"
#include "zrp/stats.hpp"

using namespace zrp;

namespace {

/* brute-force canonical weights for L=3 via the telescoped product n^b */
std::map<std::pair<std::int64_t, std::int64_t>, double> enumerate_l3(std::int64_t N, double b) {
  std::map<std::pair<std::int64_t, std::int64_t>, double> w;
  double total = 0.0;
  auto site = [&](std::int64_t n) {
    return n == 0 ? 1.0 : std::pow(static_cast<double>(n), -b);
  };
  for (std::int64_t n0 = 0; n0 <= N; ++n0)
    for (std::int64_t n1 = 0; n0 + n1 <= N; ++n1) {
      std::int64_t n2 = N - n0 - n1;
      double v = site(n0) * site(n1) * site(n2);
      w[{n0, n1}] = v;
      total += v;
    }
  for (auto& [k, v] : w) v /= total;
  return w;
}

}  // namespace

TEST_CASE("critical marginal is the normalized power law with tracked tail") {
  CriticalMarginal m = CriticalMarginal::make(3.0, 50);
  double z_c = critical_constants(3.0).z_c;
  CHECK(m.pmf[0] == doctest::Approx(1.0 / z_c).epsilon(1e-15));
  CHECK(m.pmf[1] == doctest::Approx(1.0 / z_c).epsilon(1e-15));
  CHECK(m.pmf[7] == doctest::Approx(std::pow(7.0, -3.0) / z_c).epsilon(1e-15));
  double s = m.tail_mass;
  for (double p : m.pmf) s += p;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m.tail_mass > 0.0);
  CHECK(m.n_max() == 50);
}

TEST_CASE("convolution rows extend the marginal and respect occupation caps") {
  CriticalMarginal m = CriticalMarginal::make(3.0, 12);
  ConvolutionTable t = build_convolution(m, 4, 12);
  for (std::int64_t n = 0; n <= 12; ++n)
    CHECK(t.prob(1, n) == doctest::Approx(m.pmf[static_cast<std::size_t>(n)]).epsilon(1e-14));
  /* row 2 by direct convolution */
  for (std::int64_t s : {0, 1, 5, 9}) {
    double direct = 0.0;
    for (std::int64_t j = 0; j <= s; ++j)
      direct += m.pmf[static_cast<std::size_t>(j)] * m.pmf[static_cast<std::size_t>(s - j)];
    CHECK(t.prob(2, s) == doctest::Approx(direct).epsilon(1e-13));
  }
  /* scaled representation consistency */
  CHECK(t.entry(3, 7) * std::exp(t.row_log_scale(3)) ==
        doctest::Approx(t.prob(3, 7)).epsilon(1e-13));

  /* capped at 2 per site, a sum of 5 over two sites is impossible */
  ConvolutionTable capped = build_convolution(m, 2, 5, 2);
  CHECK(capped.prob(2, 5) == 0.0);
  CHECK(capped.prob(2, 4) > 0.0);
  CHECK(capped.max_occupation() == 2);

  std::ostringstream os;
  t.write_csv(os);
  CHECK(os.str().find("k,m,") == 0);
}

TEST_CASE("partition function against frozen enumeration values") {
  /* Z(L,N) at b, independently enumerated exactly and pinned */
  struct Pin {
    std::int64_t L, N;
    double b, Z;
  };
  const Pin pins[] = {
      {2, 2, 3.0, 1.25},
      {2, 4, 3.0, 0.12094907407407407407},
      {3, 6, 3.0, 0.15432876800411522634},
      {3, 9, 4.0, 0.0039147742534417820982},
      {4, 8, 3.0, 0.22405104934803506941},
      {5, 10, 3.0, 0.35101362951586137686},
  };
  for (const Pin& p : pins) {
    double z_c = critical_constants(p.b).z_c;
    CriticalMarginal m = CriticalMarginal::make(p.b, p.N);
    ConvolutionTable t = build_convolution(m, p.L, p.N);
    CHECK(std::exp(log_partition_function(t, p.L, p.N, z_c)) ==
          doctest::Approx(p.Z).epsilon(1e-12));
  }
}

TEST_CASE("normalization approaches its leading-order form, pinned at one size") {
  /* relative deviation of z_c^L nu[S_L=N] from L * n_tilde^{-b}, b=5 */
  CriticalConstants cc = critical_constants(5.0);
  auto relerr = [&](std::int64_t L) {
    std::int64_t N = std::llround(2.0 * cc.rho_c * static_cast<double>(L));
    ModelParams mp = make_model_params(L, N, 5.0);
    CriticalMarginal m = CriticalMarginal::make(5.0, N);
    ConvolutionTable t = build_convolution(m, L, N);
    double log_pred = std::log(static_cast<double>(L)) - 5.0 * std::log(mp.n_tilde);
    return std::fabs(std::exp(std::log(cc.z_c) + t.log_prob(L, N) - log_pred) - 1.0);
  };
  CHECK(relerr(40) == doctest::Approx(0.439465435978).epsilon(1e-9));
  CHECK(relerr(80) < relerr(40));
}

TEST_CASE("exact canonical sampler: determinism, conservation, and the exact law") {
  CriticalMarginal m = CriticalMarginal::make(3.0, 6);
  ConvolutionTable t = build_convolution(m, 3, 6);

  RngStream r1(777, 0), r2(777, 0);
  for (int i = 0; i < 50; ++i) {
    Configuration a = sample_canonical(m, t, 3, 6, r1);
    Configuration b = sample_canonical(m, t, 3, 6, r2);
    CHECK(a.occ == b.occ);
    CHECK(a.total() == 6);
  }

  /* chi-square against the enumerated law */
  auto law = enumerate_l3(6, 3.0);
  std::map<std::pair<std::int64_t, std::int64_t>, double> hits;
  RngStream rng(777, 1);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    Configuration c = sample_canonical(m, t, 3, 6, rng);
    hits[{c.occ[0], c.occ[1]}] += 1.0;
  }
  std::vector<double> obs, expct;
  for (const auto& [key, p] : law) {
    expct.push_back(p * draws);
    obs.push_back(hits.count(key) ? hits[key] : 0.0);
  }
  ChiSquareResult cs = chi_square_test(obs, expct);
  CHECK(cs.pvalue > 1e-3);

  /* single site: deterministic full load */
  CriticalMarginal m1 = CriticalMarginal::make(3.0, 4);
  ConvolutionTable t1 = build_convolution(m1, 1, 4);
  Configuration c1 = sample_canonical(m1, t1, 1, 4, rng);
  CHECK(c1.occ == std::vector<std::int64_t>{4});
}

TEST_CASE("mass outside the wells: enumeration check at L=2 and edge regimes") {
  /* L=2, N=4, b=3, threshold ceil(4 - 2*rho_c - alpha), wells need
   * threshold > beta */
  ModelParams mp = make_model_params(2, 4, 3.0);
  WellPartition wp = explicit_wells(1.0, 1, 1);
  /* threshold = ceil(4 - 1.494 - 1) = 2 > beta = 1: valid */
  REQUIRE(wells_valid(mp, wp));
  DeltaMass dm = delta_mass_exact(mp, wp);

  /* direct enumeration over (n, 4-n) */
  auto site = [](std::int64_t n) {
    return n == 0 ? 1.0 : std::pow(static_cast<double>(n), -3.0);
  };
  double total = 0.0, outside = 0.0, below = 0.0, second = 0.0;
  std::int64_t thr = well_threshold(mp, wp);
  for (std::int64_t n = 0; n <= 4; ++n) {
    double w = site(n) * site(4 - n);
    total += w;
    std::int64_t mx = std::max(n, 4 - n), mn = std::min(n, 4 - n);
    bool in_well = mx >= thr && mn <= wp.beta && n != 4 - n;
    if (!in_well) {
      outside += w;
      if (mx < thr)
        below += w;
      else
        second += w;
    }
  }
  CHECK(dm.total == doctest::Approx(outside / total).epsilon(1e-10));
  CHECK(dm.below_threshold == doctest::Approx(below / total).epsilon(1e-10));
  CHECK(dm.bulk_violation == doctest::Approx(second / total).epsilon(1e-10));
  CHECK(dm.total == doctest::Approx(dm.below_threshold + dm.bulk_violation).epsilon(1e-12));
  CHECK(dm.well_mass == doctest::Approx(1.0 - dm.total).epsilon(1e-10));

  /* full-cover regime: depth margin past the condensate and ceiling past N */
  WellPartition cover = explicit_wells(10.0, 4, 4);
  DeltaMass zero = delta_mass_exact(mp, cover);
  CHECK(zero.total == 0.0);

  /* overlapping wells are refused */
  WellPartition bad = explicit_wells(1.0, 3, 3);
  CHECK_FALSE(wells_valid(mp, bad));
  CHECK_THROWS(delta_mass_exact(mp, bad));
}

TEST_CASE("outside-the-wells mass obeys the additive scale bound with a stable constant") {
  /* b=5, 2x critical density, explicit scales proportional to the
   * condensate size.  The mass splits into two mechanisms with different
   * scales: a below-threshold piece (condensate dips under N~ - s, decays
   * like a Gaussian tail in s/sqrt(L), so it shrinks faster and faster) and
   * a cap-violation piece (one factor of L for the condensate location, one
   * for the violating site, s^(1-b) for its occupation tail).  The constant
   * fitted to the second piece must hold in one band across L */
  const double b = 5.0;
  CriticalConstants cc = critical_constants(b);
  double first_c = 0.0, prev_total = 1e300, prev_below = 1e300;
  for (std::int64_t L : {30, 60, 120}) {
    std::int64_t N = std::llround(2.0 * cc.rho_c * static_cast<double>(L));
    ModelParams mp = make_model_params(L, N, b);
    std::int64_t s = std::llround(mp.n_tilde / 3.0);
    WellPartition wp = explicit_wells(static_cast<double>(s), s, s);
    REQUIRE(wells_valid(mp, wp));
    DeltaMass dm = delta_mass_exact(mp, wp);
    double scale = static_cast<double>(L) * static_cast<double>(L) *
                   std::pow(static_cast<double>(s), 1.0 - b);
    double c_fit = dm.bulk_violation / scale;
    CHECK(dm.total > 0.0);
    CHECK(dm.total < prev_total);
    CHECK(dm.below_threshold < prev_below);
    prev_total = dm.total;
    prev_below = dm.below_threshold;
    if (first_c == 0.0)
      first_c = c_fit;
    else {
      CHECK(c_fit <= 3.0 * first_c);
      CHECK(c_fit >= first_c / 3.0);
    }
  }
}

TEST_CASE("block-sum lower deviations: boundary identity, CLT window, exponential bound") {
  /* boundary m = rho_c |A|: only the all-zero block remains */
  ModelParams small = make_model_params(6, 7, 4.0);
  double m_boundary = 2.0 * small.rho_c;
  TailDeviation td0 = tail_deviation_exact(2, m_boundary, small);
  CriticalMarginal marg = CriticalMarginal::make(4.0, 7);
  ConvolutionTable tab = build_convolution(marg, 6, 7);
  double all_zero = std::exp(2.0 * std::log(marg.pmf[0]) + tab.log_prob(4, 7) - tab.log_prob(6, 7));
  CHECK(td0.prob == doctest::Approx(all_zero).epsilon(1e-12));

  /* at critical density the centered half-lattice block sum is near-median */
  CriticalConstants cc5 = critical_constants(5.0);
  std::int64_t L = 200, N = std::llround(cc5.rho_c * 200.0);
  ModelParams mp = make_model_params(L, N, 5.0);
  TailDeviation mid = tail_deviation_exact(100, 0.0, mp);
  CHECK(mid.prob > 0.35);
  CHECK(mid.prob < 0.7);

  /* exponential-moment bound dominates the exact value */
  ModelParams mp2 = make_model_params(100, std::llround(2.0 * cc5.rho_c * 100.0), 5.0);
  TailDeviation far = tail_deviation_exact(50, 20.0, mp2);
  CHECK(far.prob >= 0.0);
  CHECK(far.prob <= 1.0);
  CHECK(far.prob <= far.chernoff);
  CHECK(far.lambda == doctest::Approx(-2.0 * 20.0 / (far.v * 50.0)).epsilon(1e-14));
  CHECK(far.v == doctest::Approx(2.0 * marginal_second_moment(5.0)).epsilon(1e-14));
}

TEST_CASE("marginal second moment against its frozen value") {
  CHECK(marginal_second_moment(5.0) == doctest::Approx(0.5901323206600359069).epsilon(1e-13));
  CHECK_THROWS(marginal_second_moment(3.0));
}
