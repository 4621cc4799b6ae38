#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "zrp/chain.hpp"
#include "zrp/model.hpp"

#include <json.hpp>

namespace zrp {

/* Exhaustive state space of N particles on L sites, ordered by descending
 * first coordinate (so (N,0,...,0) is state 0).  The index map is a
 * combinatorial rank, no hashing. */
class StateEnumeration {
 public:
  std::int64_t L = 0, N = 0;
  std::vector<std::vector<std::int32_t>> states;

  std::int64_t size() const { return static_cast<std::int64_t>(states.size()); }
  std::int64_t index_of(std::span<const std::int64_t> occ) const;
  std::int64_t index_of(std::span<const std::int32_t> occ) const;

  /* C(N+L-1, L-1), exact in integer arithmetic; throws on overflow past 2^62 */
  static std::int64_t count(std::int64_t L, std::int64_t N);
};

StateEnumeration enumerate_states(std::int64_t L, std::int64_t N, std::int64_t budget = 500000);

/* sparse generator including the diagonal; rows sum to zero */
Eigen::SparseMatrix<double, Eigen::RowMajor> generator_matrix(const StateEnumeration& se,
                                                              double b);

/* exact stationary probability vector by null-space solve; dense below
 * 5000 states, sparse direct above */
std::vector<double> stationary_exact(const Eigen::SparseMatrix<double, Eigen::RowMajor>& Q);

/* normalized canonical probabilities from the product form, for cross checks */
std::vector<double> canonical_probabilities(const StateEnumeration& se, double b);

/* expected hitting times of the target set, (Qu) = -1 off target, u = 0 on it */
std::vector<double> mean_hitting_exact(const Eigen::SparseMatrix<double, Eigen::RowMajor>& Q,
                                       std::span<const std::int64_t> targets);

/* full enumerated chain with exact normalized weights; the ground-truth
 * carrier handed to the potential-theory layer */
ChainSpec zrp_chain(const StateEnumeration& se, double b);

struct BatteryReport {
  bool pass = false;
  nlohmann::json details;
};

/* Full consistency battery on one enumerable system: sampling law chi^2,
 * trace/capacity identities, restricted-well spectral gaps, long-run
 * simulation law, detailed balance, plus an injected-fault negative
 * control.  Everything is checked against the exact enumerated measure. */
BatteryReport cross_validate(std::int64_t L, std::int64_t N, double b, double alpha,
                             std::int64_t beta, std::uint64_t seed);

}  // namespace zrp
