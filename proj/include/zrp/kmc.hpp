#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "zrp/model.hpp"
#include "zrp/rng.hpp"
#include "zrp/stats.hpp"

namespace zrp {

/* Complete-binary-tree partial sums over per-site weights: O(log n) updates
 * and O(log n) weighted sampling.  Rates vary only on occupied sites and
 * occupancy is sparse near condensation, so linear scans would dominate at
 * large L. */
class PartialSumTree {
 public:
  PartialSumTree() = default;
  explicit PartialSumTree(std::span<const double> weights) { rebuild(weights); }

  void rebuild(std::span<const double> weights);
  void set(std::int64_t i, double w);
  double get(std::int64_t i) const;
  double total() const { return base_ > 0 ? tree_[1] : 0.0; }
  std::int64_t size() const { return n_; }
  /* index with probability weight/total; u uniform in [0,1) */
  std::int64_t sample(double u) const;

 private:
  std::int64_t n_ = 0, base_ = 0;
  std::vector<double> tree_;
};

struct TrajectoryState {
  Configuration cfg;
  JumpRateTable rates;
  PartialSumTree site_rates;
  double clock = 0.0;
  std::int64_t events = 0;
  std::int64_t particles = 0;           // conserved total, fixed at construction
  std::int64_t refresh_every = 100000;  // exact rate recompute cadence

  TrajectoryState(const Configuration& start, double b);
  /* exact recompute; throws if incremental totals drifted past 1e-9
   * relative or particle count changed */
  void audit();
};

struct Event {
  double dt = 0.0;
  std::int64_t site = -1;
  int dir = 0;  // +1 or -1
};

Event step(TrajectoryState& st, RngStream& rng);

struct RunSummary {
  double elapsed = 0.0;
  std::int64_t events = 0;
};

/* run until max_events or clock >= t_max (whichever first); optional event
 * log "t,x,dir" */
RunSummary run_events(TrajectoryState& st, std::int64_t max_events, double t_max, RngStream& rng,
                      std::ostream* event_csv = nullptr);

struct TraceEntry {
  std::int64_t well = -1;   // well being left
  double dwell = 0.0;       // local time spent there
  std::int64_t jump = 0;    // signed displacement to the next well, never 0
};

struct TraceRecord {
  std::vector<TraceEntry> entries;
  double local_time = 0.0;        // total time accumulated inside wells
  double outside_time = 0.0;      // remainder
  double final_dwell = 0.0;       // unfinished stay in the last well
  std::int64_t final_well = -1;
  std::int64_t events = 0;
};

/* Watch the process only while it sits in a well; dwell clocks advance in
 * local (well) time and a record is cut whenever the well index changes.
 * Runs until the local time reaches max_local_time or max_jumps records. */
TraceRecord run_trace(const ModelParams& mp, const WellPartition& wp, const Configuration& start,
                      double max_local_time, std::int64_t max_jumps, RngStream& rng,
                      std::ostream* trace_csv = nullptr);

/* spec-shaped convenience: start from the full condensate at site 0 */
TraceRecord run_trace(const ModelParams& mp, const WellPartition& wp, double max_local_time,
                      RngStream& rng);

/* Single-site birth-death chain: births at constant rate, deaths at g(n),
 * optional reflecting cap (jumps above it suppressed). */
struct BDChain {
  const JumpRateTable* rates = nullptr;
  double birth = 1.0;
  std::int64_t cap = -1;  // -1: unbounded
  std::int64_t state = 0;
};

/* one event; returns its exponential waiting time */
double bd_step(BDChain& c, RngStream& rng);

/* closed-form mean first-passage time from x up to y for the birth-death
 * chain with unit births and deaths g(n), evaluated through its stationary
 * weights in ascending order for stability */
double bd_expected_hitting(std::int64_t x, std::int64_t y, const JumpRateTable& rates,
                           std::int64_t cap = -1);

/* same quantity as the solution of the tridiagonal first-passage system */
double bd_hitting_solve(std::int64_t x, std::int64_t y, const JumpRateTable& rates,
                        std::int64_t cap = -1);

struct CouplingResult {
  std::int64_t violations = 0;
  std::int64_t arrivals = 0;
  std::int64_t events = 0;
  double elapsed = 0.0;
  double max_arrival_rate = 0.0;
  std::int64_t chain_census = 0;  // associated + disassociated
  std::vector<std::pair<double, std::int64_t>> census_curve;  // (time, census)
};

/* Domination harness at one tracked site: the site's occupation is run
 * jointly with a family of birth-death chains arranged so each associated
 * chain dominates it pathwise.  Departures are basic-coupled (joint with
 * probability g(chain)/g(site) when the site holds at least two particles,
 * independent top-up at rate g(chain)-g(site) otherwise); an arrival at the
 * site re-roots the associated family to the m children of a uniformly
 * chosen member (each a copy of its parent plus the arriving particle) and
 * retires the previous generation; each associated chain also receives
 * independent arrivals at rate 1 - a/m, a = half-sum of neighbor jump
 * rates, so its marginal law stays birth-death with unit births.
 * m = ceil(2^b) caps every jump rate.  Disassociated chains evolve
 * independently and no longer constrain the site, so only their count is
 * tracked.  A domination violation throws with the serialized state. */
CouplingResult coupling_run(const ModelParams& mp, const Configuration& start,
                            std::int64_t tracked_site, bool isolated, double t_max,
                            std::int64_t max_events, RngStream& rng);

struct ProbeResult {
  std::int64_t successes = 0;
  std::int64_t trials = 0;
  double p_hat = 0.0;
  Interval ci;         // Wilson, 3 sigma
  bool one_sided = false;  // no successes observed, upper bound only
};

/* P[the trace leaves its starting well within the local-time window],
 * starting from the exact well-conditioned stationary law (exact sampler +
 * rejection on the classifier, then rotated so the condensate sits at 0). */
ProbeResult exit_event_probe(const ModelParams& mp, const WellPartition& wp, double window,
                             std::int64_t n_traj, RngStream& rng);

}  // namespace zrp
