#include "zrp/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "zrp/ensembles.hpp"

namespace zrp {

void PartialSumTree::rebuild(std::span<const double> weights) {
  n_ = static_cast<std::int64_t>(weights.size());
  base_ = 1;
  while (base_ < n_) base_ <<= 1;
  tree_.assign(static_cast<std::size_t>(2 * base_), 0.0);
  for (std::int64_t i = 0; i < n_; ++i) tree_[static_cast<std::size_t>(base_ + i)] = weights[static_cast<std::size_t>(i)];
  for (std::int64_t i = base_ - 1; i >= 1; --i)
    tree_[static_cast<std::size_t>(i)] =
        tree_[static_cast<std::size_t>(2 * i)] + tree_[static_cast<std::size_t>(2 * i + 1)];
}

void PartialSumTree::set(std::int64_t i, double w) {
  std::int64_t k = base_ + i;
  tree_[static_cast<std::size_t>(k)] = w;
  for (k >>= 1; k >= 1; k >>= 1)
    tree_[static_cast<std::size_t>(k)] =
        tree_[static_cast<std::size_t>(2 * k)] + tree_[static_cast<std::size_t>(2 * k + 1)];
}

double PartialSumTree::get(std::int64_t i) const { return tree_[static_cast<std::size_t>(base_ + i)]; }

std::int64_t PartialSumTree::sample(double u) const {
  double target = u * total();
  std::int64_t node = 1;
  while (node < base_) {
    double left = tree_[static_cast<std::size_t>(2 * node)];
    if (target < left) {
      node = 2 * node;
    } else {
      target -= left;
      node = 2 * node + 1;
    }
  }
  std::int64_t idx = node - base_;
  if (idx >= n_) idx = n_ - 1;
  /* floating-point boundary can land on a zero-weight leaf; walk to the
   * nearest active one */
  while (idx > 0 && tree_[static_cast<std::size_t>(base_ + idx)] <= 0.0) --idx;
  return idx;
}

TrajectoryState::TrajectoryState(const Configuration& start, double b)
    : cfg(start), rates(b, start.total()), particles(start.total()) {
  std::vector<double> w(static_cast<std::size_t>(cfg.size()));
  for (std::int64_t x = 0; x < cfg.size(); ++x) w[static_cast<std::size_t>(x)] = rates.g(cfg.occ[static_cast<std::size_t>(x)]);
  site_rates.rebuild(w);
}

void TrajectoryState::audit() {
  double incremental = site_rates.total();
  double exact = 0.0;
  std::int64_t count = 0;
  std::vector<double> w(static_cast<std::size_t>(cfg.size()));
  for (std::int64_t x = 0; x < cfg.size(); ++x) {
    double gx = rates.g(cfg.occ[static_cast<std::size_t>(x)]);
    w[static_cast<std::size_t>(x)] = gx;
    exact += gx;
    count += cfg.occ[static_cast<std::size_t>(x)];
  }
  if (count != particles)
    throw std::logic_error("TrajectoryState::audit: particle count not conserved");
  if (std::fabs(incremental - exact) > 1e-9 * std::max(exact, 1.0))
    throw std::runtime_error("TrajectoryState::audit: rate drift beyond tolerance");
  site_rates.rebuild(w);
}

namespace {

/* event draw without application, fixed draw order (dt, site, direction)
 * so logs are reproducible */
Event draw_event(TrajectoryState& st, RngStream& rng) {
  double total = st.site_rates.total();
  if (!(total > 0.0)) throw std::runtime_error("step: no active site (empty system?)");
  Event ev;
  ev.dt = rng.exponential(total);
  ev.site = st.site_rates.sample(rng.uniform());
  ev.dir = rng.flip_sign();
  return ev;
}

void apply_event(TrajectoryState& st, const Event& ev) {
  const std::int64_t L = st.cfg.size();
  std::int64_t dest = (ev.site + ev.dir + L) % L;
  auto& occ = st.cfg.occ;
  if (occ[static_cast<std::size_t>(ev.site)] <= 0)
    throw std::logic_error("apply_event: move from an empty site");
  --occ[static_cast<std::size_t>(ev.site)];
  ++occ[static_cast<std::size_t>(dest)];
  st.site_rates.set(ev.site, st.rates.g(occ[static_cast<std::size_t>(ev.site)]));
  st.site_rates.set(dest, st.rates.g(occ[static_cast<std::size_t>(dest)]));
  st.clock += ev.dt;
  ++st.events;
  if (st.events % st.refresh_every == 0) st.audit();
}

}  // namespace

Event step(TrajectoryState& st, RngStream& rng) {
  Event ev = draw_event(st, rng);
  apply_event(st, ev);
  return ev;
}

RunSummary run_events(TrajectoryState& st, std::int64_t max_events, double t_max, RngStream& rng,
                      std::ostream* event_csv) {
  double t0 = st.clock;
  std::int64_t done = 0;
  char buf[96];
  if (event_csv) *event_csv << "t,x,dir\n";
  while (done < max_events && st.clock - t0 < t_max) {
    Event ev = draw_event(st, rng);
    apply_event(st, ev);
    ++done;
    if (event_csv) {
      std::snprintf(buf, sizeof buf, "%.17g,%lld,%d", st.clock, static_cast<long long>(ev.site),
                    ev.dir);
      *event_csv << buf << '\n';
    }
  }
  return {st.clock - t0, done};
}

namespace {

/* Incremental well bookkeeping: occupancy histogram plus max tracking.
 * The max can move by at most one level per event, so updates are O(1);
 * the unique-holder site is cached and re-scanned only when the cache is
 * stale, which happens on the rare events that hand the maximum to an
 * unknown site. */
class WellTracker {
 public:
  WellTracker(const Configuration& cfg, const ModelParams& mp, const WellPartition& wp)
      : cfg_(&cfg), threshold_(well_threshold(mp, wp)), beta_(wp.beta), phi_(wp.phi) {
    counts_.assign(static_cast<std::size_t>(mp.N) + 2, 0);
    for (auto v : cfg.occ) ++counts_[static_cast<std::size_t>(v)];
    max_ = 0;
    for (std::int64_t v = static_cast<std::int64_t>(counts_.size()) - 1; v >= 0; --v)
      if (counts_[static_cast<std::size_t>(v)] > 0) {
        max_ = v;
        break;
      }
    max_site_ = -1;
  }

  /* call after the configuration move from -> to has been applied */
  void apply(std::int64_t from, std::int64_t to) {
    const auto& occ = cfg_->occ;
    std::int64_t from_new = occ[static_cast<std::size_t>(from)];
    std::int64_t to_new = occ[static_cast<std::size_t>(to)];
    --counts_[static_cast<std::size_t>(from_new + 1)];
    ++counts_[static_cast<std::size_t>(from_new)];
    --counts_[static_cast<std::size_t>(to_new - 1)];
    ++counts_[static_cast<std::size_t>(to_new)];
    if (to_new > max_) {
      max_ = to_new;
      max_site_ = to;
    } else {
      while (max_ > 0 && counts_[static_cast<std::size_t>(max_)] == 0) --max_;
    }
  }

  std::int64_t max_value() const { return max_; }

  std::int64_t second_max() const {
    if (counts_[static_cast<std::size_t>(max_)] >= 2) return max_;
    for (std::int64_t v = max_ - 1; v >= 1; --v)
      if (counts_[static_cast<std::size_t>(v)] > 0) return v;
    return 0;
  }

  std::int64_t max_site() {
    if (max_site_ < 0 || cfg_->occ[static_cast<std::size_t>(max_site_)] != max_) {
      const auto& occ = cfg_->occ;
      max_site_ = 0;
      for (std::int64_t x = 1; x < cfg_->size(); ++x)
        if (occ[static_cast<std::size_t>(x)] > occ[static_cast<std::size_t>(max_site_)]) max_site_ = x;
    }
    return max_site_;
  }

  Classification::Kind kind() const {
    if (max_ >= threshold_) {
      std::int64_t s2 = second_max();
      if (s2 <= beta_) return Classification::Kind::Well;
      if (s2 <= phi_) return Classification::Kind::ExtendedOnly;
    }
    return Classification::Kind::Outside;
  }

 private:
  const Configuration* cfg_;
  std::int64_t threshold_, beta_, phi_;
  std::vector<std::int64_t> counts_;
  std::int64_t max_ = 0;
  std::int64_t max_site_ = -1;
};

std::int64_t signed_displacement(std::int64_t from, std::int64_t to, std::int64_t L) {
  std::int64_t z = ((to - from) % L + L) % L;  // 1..L-1
  return 2 * z > L ? z - L : z;
}

}  // namespace

TraceRecord run_trace(const ModelParams& mp, const WellPartition& wp, const Configuration& start,
                      double max_local_time, std::int64_t max_jumps, RngStream& rng,
                      std::ostream* trace_csv) {
  if (start.size() != mp.L || start.total() != mp.N)
    throw std::invalid_argument("run_trace: start does not match (L,N)");
  Classification cl = classify(start, mp, wp);
  if (cl.kind != Classification::Kind::Well)
    throw std::invalid_argument("run_trace: start configuration is not inside a well");

  TrajectoryState st(start, mp.b);
  WellTracker tracker(st.cfg, mp, wp);
  TraceRecord rec;
  std::int64_t current_well = cl.site;
  bool in_well = true;
  double dwell = 0.0;
  char buf[96];
  if (trace_csv) *trace_csv << "local_time,well,jump\n";

  while (true) {
    Event ev = draw_event(st, rng);
    if (in_well) {
      double remaining = max_local_time - rec.local_time;
      if (ev.dt >= remaining) {
        /* window closes during this holding interval; event is beyond it */
        rec.local_time = max_local_time;
        dwell += remaining;
        break;
      }
      rec.local_time += ev.dt;
      dwell += ev.dt;
    } else {
      rec.outside_time += ev.dt;
    }
    apply_event(st, ev);
    std::int64_t dest = (ev.site + ev.dir + mp.L) % mp.L;
    tracker.apply(ev.site, dest);

    Classification::Kind k = tracker.kind();
    in_well = (k == Classification::Kind::Well);
    if (in_well) {
      std::int64_t w = tracker.max_site();
      if (w != current_well) {
        TraceEntry e;
        e.well = current_well;
        e.dwell = dwell;
        e.jump = signed_displacement(current_well, w, mp.L);
        rec.entries.push_back(e);
        if (trace_csv) {
          std::snprintf(buf, sizeof buf, "%.17g,%lld,%lld", rec.local_time,
                        static_cast<long long>(e.well), static_cast<long long>(e.jump));
          *trace_csv << buf << '\n';
        }
        current_well = w;
        dwell = 0.0;
        if (static_cast<std::int64_t>(rec.entries.size()) >= max_jumps) break;
      }
    }
  }
  rec.final_well = current_well;
  rec.final_dwell = dwell;
  rec.events = st.events;
  return rec;
}

TraceRecord run_trace(const ModelParams& mp, const WellPartition& wp, double max_local_time,
                      RngStream& rng) {
  Configuration start = Configuration::condensate_at(mp.L, mp.N, 0);
  return run_trace(mp, wp, start, max_local_time, 1000000000LL, rng);
}

double bd_step(BDChain& c, RngStream& rng) {
  double up = (c.cap >= 0 && c.state >= c.cap) ? 0.0 : c.birth;
  double down = c.rates->g(c.state);
  double total = up + down;
  if (!(total > 0.0)) throw std::runtime_error("bd_step: stuck state");
  double dt = rng.exponential(total);
  if (rng.uniform() * total < up)
    ++c.state;
  else
    --c.state;
  return dt;
}

double bd_expected_hitting(std::int64_t x, std::int64_t y, const JumpRateTable& rates,
                           std::int64_t cap) {
  if (x == y) return 0.0;
  if (x > y) throw std::invalid_argument("bd_expected_hitting: needs x < y");
  if (cap >= 0 && y > cap) throw std::invalid_argument("bd_expected_hitting: target above cap");
  /* stationary weights nu[n] = 1/(g(1)...g(n)) = n^(-exponent), nu[0] = 1;
   * mean ascent time is the standard weighted double sum */
  double b = rates.exponent();
  double acc = 0.0;
  double partial = 0.0;  // sum of nu[0..zeta]
  std::int64_t zeta = 0;
  for (; zeta < y; ++zeta) {
    double nu = zeta == 0 ? 1.0 : std::pow(static_cast<double>(zeta), -b);
    partial += nu;
    if (zeta >= x) acc += partial / nu;
  }
  return acc;
}

double bd_hitting_solve(std::int64_t x, std::int64_t y, const JumpRateTable& rates,
                        std::int64_t cap) {
  if (x == y) return 0.0;
  if (x > y) throw std::invalid_argument("bd_hitting_solve: needs x < y");
  if (cap >= 0 && y > cap) throw std::invalid_argument("bd_hitting_solve: target above cap");
  /* tridiagonal first-passage system on {0..y-1}, absorbing at y:
   * (birth + g(z)) u(z) - birth*u(z+1) - g(z) u(z-1) = 1 */
  const std::int64_t n = y;
  std::vector<double> diag(static_cast<std::size_t>(n)), upper(static_cast<std::size_t>(n)),
      lower(static_cast<std::size_t>(n)), rhs(static_cast<std::size_t>(n), 1.0);
  for (std::int64_t z = 0; z < n; ++z) {
    double g = rates.g(z);
    diag[static_cast<std::size_t>(z)] = 1.0 + g;
    upper[static_cast<std::size_t>(z)] = -1.0;
    lower[static_cast<std::size_t>(z)] = -g;
  }
  /* forward elimination */
  for (std::int64_t z = 1; z < n; ++z) {
    double w = lower[static_cast<std::size_t>(z)] / diag[static_cast<std::size_t>(z - 1)];
    diag[static_cast<std::size_t>(z)] -= w * upper[static_cast<std::size_t>(z - 1)];
    rhs[static_cast<std::size_t>(z)] -= w * rhs[static_cast<std::size_t>(z - 1)];
  }
  std::vector<double> u(static_cast<std::size_t>(n));
  u[static_cast<std::size_t>(n - 1)] =
      rhs[static_cast<std::size_t>(n - 1)] / diag[static_cast<std::size_t>(n - 1)];
  for (std::int64_t z = n - 2; z >= 0; --z)
    u[static_cast<std::size_t>(z)] = (rhs[static_cast<std::size_t>(z)] -
                                      upper[static_cast<std::size_t>(z)] * u[static_cast<std::size_t>(z + 1)]) /
                                     diag[static_cast<std::size_t>(z)];
  return u[static_cast<std::size_t>(x)];
}

CouplingResult coupling_run(const ModelParams& mp, const Configuration& start,
                            std::int64_t tracked_site, bool isolated, double t_max,
                            std::int64_t max_events, RngStream& rng) {
  if (start.size() != mp.L) throw std::invalid_argument("coupling_run: bad start size");
  const std::int64_t m = static_cast<std::int64_t>(std::ceil(std::pow(2.0, mp.b)));
  const std::int64_t L = mp.L;
  const std::int64_t x = tracked_site;
  JumpRateTable rates(mp.b, std::max<std::int64_t>(start.total() + 16, 64));
  Configuration env = start;
  /* associated family starts as generation-1 copies of the site */
  std::vector<std::int64_t> assoc(static_cast<std::size_t>(m), env.occ[static_cast<std::size_t>(x)]);
  std::int64_t retired = 0;

  CouplingResult res;
  res.chain_census = m;
  res.census_curve.emplace_back(0.0, m);
  double t = 0.0;

  auto g_of = [&](std::int64_t site) { return rates.g(env.occ[static_cast<std::size_t>(site)]); };

  auto serialize = [&](const char* why) {
    std::ostringstream ss;
    ss << "coupling_run: " << why << " at t=" << t << " site occupation=" << env.occ[static_cast<std::size_t>(x)]
       << " chains=[";
    for (std::size_t k = 0; k < assoc.size(); ++k) ss << (k ? "," : "") << assoc[k];
    ss << "]";
    return ss.str();
  };

  std::vector<double> topup(static_cast<std::size_t>(m), 0.0);
  while (t < t_max && res.events < max_events) {
    double env_total = 0.0;
    if (isolated) {
      env_total = g_of(x);
    } else {
      for (std::int64_t w = 0; w < L; ++w) env_total += g_of(w);
    }
    double gx = g_of(x);
    double ax = 0.0;
    if (!isolated)
      ax = 0.5 * (g_of((x + L - 1) % L) + g_of((x + 1) % L));
    if (ax > static_cast<double>(m) + 1e-12)
      throw std::logic_error("coupling_run: arrival rate exceeds the chain count");
    res.max_arrival_rate = std::max(res.max_arrival_rate, ax);
    double arr_total = static_cast<double>(m) - ax;  // m chains at rate 1 - ax/m each

    double top_total = 0.0;
    std::int64_t hx = env.occ[static_cast<std::size_t>(x)];
    for (std::int64_t k = 0; k < m; ++k) {
      double tk = 0.0;
      if (hx <= 1) tk = std::max(0.0, rates.g(assoc[static_cast<std::size_t>(k)]) - gx);
      topup[static_cast<std::size_t>(k)] = tk;
      top_total += tk;
    }

    double total = env_total + arr_total + top_total;
    if (!(total > 0.0)) break;  // isolated empty site with all chains at 0 cannot move
    t += rng.exponential(total);
    if (t >= t_max) break;
    double u = rng.uniform() * total;
    ++res.events;

    if (u < env_total) {
      /* environment move */
      std::int64_t w = x;
      if (!isolated) {
        double acc = 0.0;
        for (std::int64_t s = 0; s < L; ++s) {
          acc += g_of(s);
          if (u < acc) {
            w = s;
            break;
          }
        }
      }
      int dir = rng.flip_sign();
      std::int64_t dest = isolated ? -1 : (w + dir + L) % L;
      if (w == x) {
        /* departure from the tracked site: basic-coupled chain departures */
        std::int64_t h_before = env.occ[static_cast<std::size_t>(x)];
        double gh = rates.g(h_before);
        for (std::int64_t k = 0; k < m; ++k) {
          double gz = rates.g(assoc[static_cast<std::size_t>(k)]);
          double p = gh > 0.0 ? std::min(1.0, gz / gh) : 0.0;
          if (rng.bernoulli(p)) --assoc[static_cast<std::size_t>(k)];
        }
      }
      if (!isolated && dest == x) {
        /* arrival at the tracked site: re-root the associated family */
        std::int64_t kstar = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(m)));
        std::int64_t parent = assoc[static_cast<std::size_t>(kstar)];
        retired += m;
        std::fill(assoc.begin(), assoc.end(), parent + 1);
        ++res.arrivals;
        res.census_curve.emplace_back(t, m + retired);
      }
      --env.occ[static_cast<std::size_t>(w)];
      if (!isolated) ++env.occ[static_cast<std::size_t>(dest)];
    } else if (u < env_total + arr_total) {
      /* padding arrival to one associated chain */
      std::int64_t k = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(m)));
      ++assoc[static_cast<std::size_t>(k)];
    } else {
      /* top-up departure (only live when the site holds 0 or 1) */
      double v = u - env_total - arr_total;
      std::int64_t k = m - 1;
      double acc = 0.0;
      for (std::int64_t j = 0; j < m; ++j) {
        acc += topup[static_cast<std::size_t>(j)];
        if (v < acc) {
          k = j;
          break;
        }
      }
      --assoc[static_cast<std::size_t>(k)];
    }

    std::int64_t hx_now = env.occ[static_cast<std::size_t>(x)];
    if (hx_now < 0) throw std::logic_error(serialize("negative site occupation"));
    for (std::int64_t k = 0; k < m; ++k) {
      if (assoc[static_cast<std::size_t>(k)] < hx_now) {
        ++res.violations;
        throw std::runtime_error(serialize("domination order violated"));
      }
    }
  }
  res.elapsed = t_max < t ? t_max : t;
  res.chain_census = m + retired;
  res.census_curve.emplace_back(res.elapsed, res.chain_census);
  return res;
}

ProbeResult exit_event_probe(const ModelParams& mp, const WellPartition& wp, double window,
                             std::int64_t n_traj, RngStream& rng) {
  if (n_traj < 1) throw std::invalid_argument("exit_event_probe: need at least one trajectory");
  CriticalMarginal marginal = CriticalMarginal::make(mp.b, mp.N);
  ConvolutionTable table = build_convolution(marginal, mp.L, mp.N);
  ProbeResult pr;
  pr.trials = n_traj;
  for (std::int64_t i = 0; i < n_traj; ++i) {
    Configuration cfg;
    Classification cl;
    do {
      cfg = sample_canonical(marginal, table, mp.L, mp.N, rng);
      cl = classify(cfg, mp, wp);
    } while (cl.kind != Classification::Kind::Well);
    /* translation invariance: rotate the condensate to the origin */
    Configuration rot;
    rot.occ.resize(static_cast<std::size_t>(mp.L));
    for (std::int64_t s = 0; s < mp.L; ++s)
      rot.occ[static_cast<std::size_t>(s)] = cfg.occ[static_cast<std::size_t>((s + cl.site) % mp.L)];
    if (window > 0.0) {
      TraceRecord tr = run_trace(mp, wp, rot, window, 1, rng);
      if (!tr.entries.empty()) ++pr.successes;
    }
  }
  pr.p_hat = static_cast<double>(pr.successes) / static_cast<double>(pr.trials);
  pr.ci = wilson_interval(pr.successes, pr.trials, 3.0);
  pr.one_sided = (pr.successes == 0);
  return pr;
}

}  // namespace zrp
