#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "zrp/model.hpp"
#include "zrp/rng.hpp"

namespace zrp {

/* Single-site law at the critical fugacity: P[n] = 1/(z_c n^b) for n >= 1
 * and 1/z_c at n = 0.  Truncated at n_max (exact for fixed-N work, since no
 * site can ever hold more than N particles); the discarded mass is kept for
 * grand-canonical bookkeeping. */
struct CriticalMarginal {
  double b = 0.0;
  double z_c = 0.0;
  std::vector<double> pmf;  // index = occupation, size n_max+1
  double tail_mass = 0.0;

  std::int64_t n_max() const { return static_cast<std::int64_t>(pmf.size()) - 1; }
  static CriticalMarginal make(double b, std::int64_t n_max);
};

/* p[k][m] = P[eta_1 + ... + eta_k = m] under iid critical marginals,
 * optionally with every site capped at max_occupation.  Rows are stored
 * scaled so the largest entry is 1, with the true magnitude carried in a
 * per-row log factor; this keeps L*N ~ 10^6 tables inside double range
 * (the raw probabilities underflow near L ~ 300). */
class ConvolutionTable {
 public:
  std::int64_t num_rows() const { return static_cast<std::int64_t>(rows_.size()); }
  std::int64_t max_sum() const { return max_sum_; }
  std::int64_t max_occupation() const { return cap_; }

  /* log P[S_k = m]; -inf when the event is impossible */
  double log_prob(std::int64_t k, std::int64_t m) const;
  double prob(std::int64_t k, std::int64_t m) const;
  /* scaled row access for ratio work: true value = entry(k,m)*exp(row_log_scale(k)) */
  double entry(std::int64_t k, std::int64_t m) const;
  double row_log_scale(std::int64_t k) const;

  void write_csv(std::ostream& os) const;

  friend ConvolutionTable build_convolution(const CriticalMarginal& marginal, std::int64_t L,
                                            std::int64_t N, std::int64_t max_occupation,
                                            std::int64_t budget);

 private:
  std::int64_t max_sum_ = 0;
  std::int64_t cap_ = 0;
  std::vector<std::vector<double>> rows_;
  std::vector<double> log_scale_;
};

/* budget guards the table footprint (entries), default 1e8 */
ConvolutionTable build_convolution(const CriticalMarginal& marginal, std::int64_t L,
                                   std::int64_t N, std::int64_t max_occupation = -1,
                                   std::int64_t budget = 100000000);

/* log Z_{L,N} = L log z_c + log P[S_L = N]; throws when the state is impossible */
double log_partition_function(const ConvolutionTable& table, std::int64_t L, std::int64_t N,
                              double z_c);

/* Exact draw from the fixed-total measure: site occupations sampled
 * sequentially, each conditional read off the convolution table. */
Configuration sample_canonical(const CriticalMarginal& marginal, const ConvolutionTable& table,
                               std::int64_t L, std::int64_t N, RngStream& rng);

struct DeltaMass {
  double total = 0.0;            // measure outside every well
  double below_threshold = 0.0;  // max occupation never reaches the well threshold
  double bulk_violation = 0.0;   // threshold reached but a second site exceeds beta
  double well_mass = 0.0;        // complement, L * (single-well mass)
};

/* Exact mass outside the wells via capped convolutions.  Requires either
 * disjoint wells (threshold > beta) or the trivial full-cover regime
 * (threshold <= 0 and beta >= N, where the answer is 0). */
DeltaMass delta_mass_exact(const ModelParams& mp, const WellPartition& wp,
                           std::int64_t budget = 100000000);

struct TailDeviation {
  double prob = 0.0;       // exact P[ sum_{x in A} (eta_x - rho_c) <= -m ]
  double chernoff = 1.0;   // exponential-moment bound at lambda = -2m/(v|A|)
  double lambda = 0.0;
  double v = 0.0;          // 2 * second moment of the marginal
};

/* A is a block of A_size sites inside the L-site system with N particles. */
TailDeviation tail_deviation_exact(std::int64_t A_size, double m, const ModelParams& mp,
                                   std::int64_t budget = 100000000);

/* second moment of the critical marginal, needs b > 3 to converge */
double marginal_second_moment(double b);

}  // namespace zrp
