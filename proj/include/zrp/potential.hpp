#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zrp/chain.hpp"
#include "zrp/model.hpp"
#include "zrp/oracle.hpp"

namespace zrp {

/* capacity of the nearest-neighbor walk on the L-ring between x and y:
 * 1/(d(L-d)) with d = |y-x|, equivalently (1/L)(1/d + 1/(L-d)) */
double ring_capacity(std::int64_t L, std::int64_t x, std::int64_t y);

/* harmonic profile on the ring: 1 at 0, 0 at y, linear in between */
double ring_harmonic(std::int64_t L, std::int64_t y, std::int64_t z);

struct CapacityResult {
  double cap = 0.0;
  std::vector<double> h;  // equilibrium potential: 1 on A, 0 on B
  double residual = 0.0;  // relative linear-solve residual
};

/* Discrete Dirichlet problem between disjoint sets A and B; the returned
 * capacity is the Dirichlet form of the solution.  A handful of random
 * feasible profiles are checked against the variational lower bound as a
 * sanity net. */
CapacityResult generic_capacity(const ChainSpec& chain, std::span<const std::int64_t> A,
                                std::span<const std::int64_t> B, int variational_checks = 20);

/* Watch the chain only while it sits in E: excursions through the
 * complement are collapsed into direct jumps weighted by absorption
 * probabilities.  States renumbered 0..|E|-1 in the order given. */
ChainSpec trace_chain(const ChainSpec& chain, std::span<const std::int64_t> E);

/* Dynamics with every jump out of the given set suppressed. */
ChainSpec restricted_chain(const ChainSpec& chain, std::span<const std::int64_t> well);

/* second-smallest eigenvalue of the symmetrized negative generator; dense
 * eigensolve below 2000 states, deflated power iteration above */
double spectral_gap(const ChainSpec& chain, double rel_tol = 1e-8);

/* Enumerated system with classified wells and its trace chain: the exact
 * ground truth for condensate hop-rate work at desk scales. */
struct WellSystem {
  ModelParams mp;
  WellPartition wp;
  StateEnumeration se;
  ChainSpec chain;                              // full chain, normalized weights
  std::vector<std::vector<std::int64_t>> wells; // full-chain state indices per well
  std::vector<std::int64_t> well_states;        // union of wells, enumeration order
  double well_mass = 0.0;                       // stationary mass of the union
  ChainSpec trace;                              // trace chain on well_states
  std::vector<std::int64_t> trace_well_of;      // well index per trace state
};

WellSystem build_well_system(const ModelParams& mp, const WellPartition& wp,
                             std::int64_t budget = 500000);

/* stationary-averaged condensate hop rates r(z), z = 1..L-1: the expected
 * trace rate from a fixed well into the well z sites away */
std::vector<double> well_hop_rates_exact(const WellSystem& ws, std::int64_t base_well = 0);

struct IdentityCheck {
  double lhs = 0.0, rhs = 0.0, rel_err = 0.0;
};

/* hop-rate / capacity identity between wells 0 and z: the averaged rate
 * weighted by the source-well mass equals the half-sum of three trace
 * capacities (single wells and their union against the rest) */
IdentityCheck rate_capacity_identity(const WellSystem& ws, std::int64_t z);

/* relative defect of (well mass) * (trace capacity) against the full-chain
 * capacity between the same sets, checked between wells 0 and z */
double trace_capacity_consistency(const WellSystem& ws, std::int64_t z);

}  // namespace zrp
