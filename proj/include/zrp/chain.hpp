#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace zrp {

/* Generic finite reversible chain: indexed states, sparse rates, stationary
 * weights (unnormalized allowed).  The carrier for every capacity / trace /
 * spectral computation; reversibility is a construction-time contract. */
class ChainSpec {
 public:
  ChainSpec() = default;
  explicit ChainSpec(std::int64_t n) : adj_(static_cast<std::size_t>(n)), pi_(static_cast<std::size_t>(n), 1.0) {}

  std::int64_t size() const { return static_cast<std::int64_t>(adj_.size()); }

  void set_weight(std::int64_t i, double w) { pi_[static_cast<std::size_t>(i)] = w; }
  double weight(std::int64_t i) const { return pi_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& weights() const { return pi_; }
  double total_weight() const;

  void add_rate(std::int64_t i, std::int64_t j, double rate);
  double rate(std::int64_t i, std::int64_t j) const;  // 0 when absent
  const std::vector<std::pair<std::int32_t, double>>& row(std::int64_t i) const {
    return adj_[static_cast<std::size_t>(i)];
  }
  double exit_rate(std::int64_t i) const;

  /* max relative detailed-balance defect over stored pairs */
  double reversibility_defect() const;
  /* throws when the defect exceeds tol */
  void validate_reversible(double tol = 1e-10) const;
  bool connected() const;

 private:
  std::vector<std::vector<std::pair<std::int32_t, double>>> adj_;
  std::vector<double> pi_;
};

/* unit-rate nearest-neighbor walk on the L-ring, uniform weights; with this
 * normalization the two-point capacity is exactly 1/(d(L-d)) */
ChainSpec ring_chain(std::int64_t L);

double dirichlet_form(const ChainSpec& chain, std::span<const double> f);

/* Text exchange format: "pi i weight" lines first, then "i j rate" lines.
 * '#' starts a comment. */
void write_edge_list(const ChainSpec& chain, std::ostream& os);
ChainSpec read_edge_list(std::istream& is);

}  // namespace zrp
