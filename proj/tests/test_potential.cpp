#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "zrp/chain.hpp"
#include "zrp/model.hpp"
#include "zrp/potential.hpp"
#include "zrp/rng.hpp"

using namespace zrp;

TEST_CASE("two-point ring capacity: closed form and both decompositions") {
  CHECK(ring_capacity(4, 0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(ring_capacity(4, 0, 2) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS(ring_capacity(4, 1, 1));
  for (std::int64_t L : {3, 5, 8, 64})
    for (std::int64_t d = 1; d < L; ++d) {
      double a = ring_capacity(L, 0, d);
      double alt = (1.0 / static_cast<double>(L)) *
                   (1.0 / static_cast<double>(d) + 1.0 / static_cast<double>(L - d));
      CHECK(std::fabs(a - alt) <= 1e-15 * a);
      CHECK(a == ring_capacity(L, d, 0));
    }
}

TEST_CASE("ring capacity matches the Dirichlet solve on the ring chain") {
  RngStream rng(5, 0);
  for (int rep = 0; rep < 8; ++rep) {
    std::int64_t L = 64;
    std::int64_t x = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(L)));
    std::int64_t y = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(L)));
    if (x == y) continue;
    ChainSpec ring = ring_chain(L);
    std::vector<std::int64_t> A{x}, B{y};
    CapacityResult cr = generic_capacity(ring, A, B);
    CHECK(std::fabs(cr.cap - ring_capacity(L, x, y)) <= 1e-12 * ring_capacity(L, x, y));
    for (double v : cr.h) {
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("ring harmonic profile and its Dirichlet form") {
  CHECK(ring_harmonic(10, 4, 0) == 1.0);
  CHECK(ring_harmonic(10, 4, 4) == 0.0);
  CHECK(ring_harmonic(10, 4, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ring_harmonic(10, 4, 7) == doctest::Approx(0.5).epsilon(1e-15));

  for (std::int64_t L : {5, 12}) {
    for (std::int64_t y = 1; y < L; ++y) {
      ChainSpec ring = ring_chain(L);
      std::vector<double> f(static_cast<std::size_t>(L));
      for (std::int64_t z = 0; z < L; ++z) f[static_cast<std::size_t>(z)] = ring_harmonic(L, y, z);
      double d = dirichlet_form(ring, f);
      CHECK(std::fabs(d - ring_capacity(L, 0, y)) <= 1e-12 * ring_capacity(L, 0, y));
    }
  }
}

TEST_CASE("dirichlet form basics") {
  ChainSpec two(2);
  two.set_weight(0, 1.0);
  two.set_weight(1, 1.0);
  two.add_rate(0, 1, 0.7);
  two.add_rate(1, 0, 0.7);
  std::vector<double> f{0.0, 1.0};
  CHECK(dirichlet_form(two, f) == doctest::Approx(0.7).epsilon(1e-15));
  std::vector<double> c{3.0, 3.0};
  CHECK(dirichlet_form(two, c) == 0.0);
}

TEST_CASE("generic capacity: boundary conductance case, symmetry, monotonicity") {
  /* no interior: capacity is the total boundary conductance */
  ChainSpec star(3);
  star.set_weight(0, 0.5);
  star.set_weight(1, 0.25);
  star.set_weight(2, 0.25);
  star.add_rate(0, 1, 1.0);
  star.add_rate(1, 0, 2.0);
  star.add_rate(0, 2, 3.0);
  star.add_rate(2, 0, 6.0);
  std::vector<std::int64_t> A{0}, B{1, 2};
  CapacityResult cr = generic_capacity(star, A, B);
  CHECK(cr.cap == doctest::Approx(0.5 * 1.0 + 0.5 * 3.0).epsilon(1e-13));

  /* symmetry cap(A,B) = cap(B,A) */
  ChainSpec ring = ring_chain(9);
  std::vector<std::int64_t> X{0, 1}, Y{4};
  CHECK(generic_capacity(ring, X, Y).cap ==
        doctest::Approx(generic_capacity(ring, Y, X).cap).epsilon(1e-13));

  /* monotone in the source set */
  std::vector<std::int64_t> X2{0, 1, 2};
  CHECK(generic_capacity(ring, X2, Y).cap >= generic_capacity(ring, X, Y).cap - 1e-14);

  /* intersecting sets refused; isolated interior state flagged */
  std::vector<std::int64_t> bad{0};
  CHECK_THROWS(generic_capacity(ring, bad, bad));
  ChainSpec broken(3);
  broken.add_rate(0, 2, 1.0);
  broken.add_rate(2, 0, 1.0);
  std::vector<std::int64_t> A2{0}, B2{2};
  CHECK_THROWS(generic_capacity(broken, A2, B2));
}

TEST_CASE("variational principle: random feasible profiles never beat the minimizer") {
  ChainSpec ring = ring_chain(17);
  std::vector<std::int64_t> A{0}, B{5};
  CapacityResult cr = generic_capacity(ring, A, B);
  RngStream rng(99, 0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> f(17);
    for (auto& v : f) v = rng.uniform();
    f[0] = 1.0;
    f[5] = 0.0;
    CHECK(dirichlet_form(ring, f) >= cr.cap - 1e-12);
  }
}

TEST_CASE("trace chain: three-state excursion formula and dropped self-returns") {
  ChainSpec c(3);
  for (int i = 0; i < 3; ++i) c.set_weight(i, 1.0);
  c.add_rate(0, 1, 2.0);
  c.add_rate(1, 0, 2.0);
  c.add_rate(1, 2, 3.0);
  c.add_rate(2, 1, 3.0);
  std::vector<std::int64_t> E{0, 2};
  ChainSpec tr = trace_chain(c, E);
  CHECK(tr.size() == 2);
  /* hop through the middle: rate 2 * P[hit 2 before 0 from 1] = 2 * 3/5 */
  CHECK(tr.rate(0, 1) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(tr.rate(1, 0) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(tr.rate(0, 0) == 0.0);
  CHECK(tr.reversibility_defect() < 1e-12);
  CHECK(tr.weight(0) == 1.0);
}

TEST_CASE("trace of the full state space is the chain itself") {
  ChainSpec ring = ring_chain(6);
  std::vector<std::int64_t> all{0, 1, 2, 3, 4, 5};
  ChainSpec tr = trace_chain(ring, all);
  for (std::int64_t i = 0; i < 6; ++i)
    for (std::int64_t j = 0; j < 6; ++j)
      CHECK(tr.rate(i, j) == doctest::Approx(ring.rate(i, j)).epsilon(1e-15));
}

TEST_CASE("restricted chain keeps inside rates only") {
  ChainSpec ring = ring_chain(6);
  std::vector<std::int64_t> well{1, 2, 3};
  ChainSpec r = restricted_chain(ring, well);
  CHECK(r.size() == 3);
  CHECK(r.rate(0, 1) == doctest::Approx(1.0));
  CHECK(r.rate(1, 2) == doctest::Approx(1.0));
  CHECK(r.rate(0, 2) == 0.0);
  CHECK(r.exit_rate(0) == doctest::Approx(1.0));  // the outward jump is gone
  std::vector<std::int64_t> split{0, 3};
  CHECK_THROWS(restricted_chain(ring, split));
}

TEST_CASE("spectral gap: two-state, half-rate ring, unit-rate ring") {
  ChainSpec two(2);
  two.set_weight(0, 0.6);
  two.set_weight(1, 0.4);
  two.add_rate(0, 1, 1.0);
  two.add_rate(1, 0, 1.5);
  CHECK(spectral_gap(two) == doctest::Approx(2.5).epsilon(1e-8));

  std::int64_t L = 12;
  ChainSpec half(L);
  for (std::int64_t i = 0; i < L; ++i) {
    half.set_weight(i, 1.0 / static_cast<double>(L));
    half.add_rate(i, (i + 1) % L, 0.5);
    half.add_rate(i, (i + L - 1) % L, 0.5);
  }
  double tau = 6.28318530717958647692;
  CHECK(spectral_gap(half) ==
        doctest::Approx(1.0 - std::cos(tau / static_cast<double>(L))).epsilon(1e-8));
  CHECK(spectral_gap(ring_chain(L)) ==
        doctest::Approx(2.0 * (1.0 - std::cos(tau / static_cast<double>(L)))).epsilon(1e-8));
}

TEST_CASE("restricted condensate wells relax on the expected polynomial scale") {
  /* fixed 2x critical density, b=3; gap decreasing, gap*L^4 in one band */
  double prev_gap = 1e300;
  double lo = 1e300, hi = 0.0;
  const std::int64_t Ns[] = {4, 6, 7};
  const std::int64_t Ls[] = {3, 4, 5};
  for (int i = 0; i < 3; ++i) {
    ModelParams mp = make_model_params(Ls[i], Ns[i], 3.0);
    WellPartition wp = explicit_wells(0.0, 1, 1);
    REQUIRE(wells_valid(mp, wp));
    WellSystem ws = build_well_system(mp, wp);
    ChainSpec rest = restricted_chain(ws.chain, ws.wells[0]);
    double gap = spectral_gap(rest);
    CHECK(gap > 0.0);
    CHECK(gap <= prev_gap * (1.0 + 1e-12));
    prev_gap = gap;
    double scaled = gap * std::pow(static_cast<double>(Ls[i]), 4.0);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  CHECK(hi / lo <= 12.0);
}

TEST_CASE("well system: structure, trace reversibility, flow balance") {
  ModelParams mp = make_model_params(3, 6, 3.0);
  WellPartition wp = explicit_wells(1.0, 2, 2);
  REQUIRE(wells_valid(mp, wp));
  WellSystem ws = build_well_system(mp, wp);
  CHECK(ws.wells.size() == 3);
  CHECK(ws.wells[0].size() == ws.wells[1].size());
  CHECK(ws.well_mass > 0.0);
  CHECK(ws.well_mass <= 1.0);
  CHECK(ws.trace.size() == static_cast<std::int64_t>(ws.well_states.size()));
  CHECK(ws.trace.reversibility_defect() < 1e-10);

  /* stationary flow balance survives the trace construction */
  const std::int64_t m = ws.trace.size();
  for (std::int64_t j = 0; j < m; ++j) {
    double in = 0.0;
    for (std::int64_t i = 0; i < m; ++i)
      if (i != j) in += ws.trace.weight(i) * ws.trace.rate(i, j);
    double out = ws.trace.weight(j) * ws.trace.exit_rate(j);
    CHECK(std::fabs(in - out) <= 1e-12 * std::max(1.0, out));
  }

  /* relabeling wells is a lattice rotation: capacities agree */
  std::vector<std::int64_t> rest01;
  for (auto s : ws.wells[1]) rest01.push_back(s);
  for (auto s : ws.wells[2]) rest01.push_back(s);
  double c0 = generic_capacity(ws.chain, ws.wells[0], rest01).cap;
  std::vector<std::int64_t> rest10;
  for (auto s : ws.wells[0]) rest10.push_back(s);
  for (auto s : ws.wells[2]) rest10.push_back(s);
  double c1 = generic_capacity(ws.chain, ws.wells[1], rest10).cap;
  CHECK(std::fabs(c0 - c1) <= 1e-12 * c0);
  double p01 = generic_capacity(ws.chain, ws.wells[0], ws.wells[1]).cap;
  double p02 = generic_capacity(ws.chain, ws.wells[0], ws.wells[2]).cap;
  CHECK(std::fabs(p01 - p02) <= 1e-12 * p01);
}

TEST_CASE("hop-rate capacity identity and trace consistency on enumerable systems") {
  struct Case {
    std::int64_t L, N, beta;
    double b, alpha;
  };
  const Case cases[] = {
      {2, 4, 1, 3.0, 1.0}, {3, 6, 2, 3.0, 1.0}, {4, 8, 2, 3.0, 2.0}, {5, 10, 2, 3.0, 2.0}};
  for (const Case& c : cases) {
    ModelParams mp = make_model_params(c.L, c.N, c.b);
    WellPartition wp = explicit_wells(c.alpha, c.beta, c.beta);
    REQUIRE(wells_valid(mp, wp));
    WellSystem ws = build_well_system(mp, wp);
    for (std::int64_t z = 1; z < c.L; ++z) {
      IdentityCheck ic = rate_capacity_identity(ws, z);
      CHECK(ic.rel_err <= 1e-8);
      CHECK(trace_capacity_consistency(ws, z) <= 1e-10);
    }
    /* lattice reflection: r(z) = r(L-z); entry z-1 holds displacement z */
    std::vector<double> r = well_hop_rates_exact(ws, 0);
    REQUIRE(r.size() == static_cast<std::size_t>(c.L - 1));
    for (std::int64_t z = 1; z < c.L; ++z)
      CHECK(std::fabs(r[static_cast<std::size_t>(z - 1)] -
                      r[static_cast<std::size_t>(c.L - z - 1)]) <=
            1e-10 * r[static_cast<std::size_t>(z - 1)]);
    /* the base well is arbitrary by rotation invariance */
    std::vector<double> r1 = well_hop_rates_exact(ws, 1);
    for (std::int64_t z = 1; z < c.L; ++z)
      CHECK(r[static_cast<std::size_t>(z - 1)] ==
            doctest::Approx(r1[static_cast<std::size_t>(z - 1)]).epsilon(1e-10));
  }
}

TEST_CASE("edge list round trip") {
  ModelParams mp = make_model_params(3, 6, 3.0);
  WellPartition wp = explicit_wells(1.0, 2, 2);
  WellSystem ws = build_well_system(mp, wp);
  std::ostringstream os;
  write_edge_list(ws.trace, os);
  std::istringstream is(os.str());
  ChainSpec back = read_edge_list(is);
  REQUIRE(back.size() == ws.trace.size());
  for (std::int64_t i = 0; i < back.size(); ++i) {
    CHECK(back.weight(i) == ws.trace.weight(i));
    for (const auto& [j, r] : ws.trace.row(i)) CHECK(back.rate(i, j) == r);
  }
  CHECK(back.reversibility_defect() == doctest::Approx(ws.trace.reversibility_defect()).epsilon(1e-12));
}
