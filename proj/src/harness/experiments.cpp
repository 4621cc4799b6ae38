#include "zrp/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "zrp/ensembles.hpp"
#include "zrp/kmc.hpp"
#include "zrp/levy.hpp"
#include "zrp/model.hpp"
#include "zrp/oracle.hpp"
#include "zrp/potential.hpp"
#include "zrp/rng.hpp"
#include "zrp/stats.hpp"

namespace zrp {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamLln = 1000000;
constexpr std::uint64_t kStreamJump = 2000000;
constexpr std::uint64_t kStreamExit = 3000000;
constexpr std::uint64_t kStreamLevy = 4000000;
constexpr std::uint64_t kStreamCoupling = 5000000;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/* CSV artifact for an experiment; empty out_dir disables file output */
class CsvSink {
 public:
  CsvSink(const std::string& out_dir, const json& cfg, const std::string& default_base,
          const std::string& header) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    std::string base = cfg.value("file_base", default_base);
    path_ = out_dir + "/" + base + ".csv";
    os_.open(path_, std::ios::binary | std::ios::trunc);
    if (!os_) throw std::runtime_error("cannot open artifact file " + path_);
    os_ << header << '\n';
  }
  void row(const std::string& line) {
    if (os_.is_open()) os_ << line << '\n';
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream os_;
};

/* index-sharded loop; slot writes keep results independent of worker count */
template <typename F>
void parallel_for(std::int64_t n, int threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (std::int64_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
  };
  std::vector<std::thread> pool;
  int k = std::min<std::int64_t>(threads, n);
  pool.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

std::int64_t density_to_count(const json& cfg, const ModelParams*, std::int64_t L, double rho_c) {
  if (cfg.contains("N")) return cfg.at("N").get<std::int64_t>();
  double factor = cfg.value("rho_factor", 2.0);
  return std::llround(factor * rho_c * static_cast<double>(L));
}

}  // namespace

StatReport exp_lln_condensate(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  StatReport rep;
  rep.name = "lln_condensate";
  const double b = cfg.at("b").get<double>();
  const std::int64_t L = cfg.at("L").get<std::int64_t>();
  const std::int64_t draws = cfg.value("draws", 10000);
  CriticalConstants cc = critical_constants(b);
  const std::int64_t N = density_to_count(cfg, nullptr, L, cc.rho_c);
  ModelParams mp = make_model_params(L, N, b);
  WellPartition defaults = scaling_default_wells(mp);
  const double allowance = defaults.alpha / static_cast<double>(L);
  const double target = mp.n_tilde / static_cast<double>(L);

  CriticalMarginal marginal = CriticalMarginal::make(b, N);
  ConvolutionTable table = build_convolution(marginal, L, N);
  RngStream rng(seed, kStreamLln);
  CsvSink csv(out_dir, cfg, rep.name, "draw,condensate_size");
  RunningStat stat;
  for (std::int64_t i = 0; i < draws; ++i) {
    Configuration c = sample_canonical(marginal, table, L, N, rng);
    std::int64_t mx = 0;
    for (auto v : c.occ) mx = std::max(mx, v);
    stat.add(static_cast<double>(mx) / static_cast<double>(L));
    csv.row(std::to_string(i) + "," + std::to_string(mx));
  }
  const double bias = std::fabs(stat.mean - target);
  const double gate = 3.0 * stat.sem() + allowance;
  rep.pass = bias <= gate;
  rep.details = {{"L", L},
                 {"N", N},
                 {"b", b},
                 {"draws", draws},
                 {"mean_fraction", stat.mean},
                 {"sem", stat.sem()},
                 {"target_fraction", target},
                 {"bias", bias},
                 {"default_scale_allowance", allowance},
                 {"gate", gate},
                 {"pass", rep.pass}};
  return rep;
}

StatReport exp_jump_law(const json& cfg, std::uint64_t seed, const std::string& out_dir,
                        int threads) {
  StatReport rep;
  rep.name = "jump_law";
  const std::int64_t L = cfg.at("L").get<std::int64_t>();
  const double b = cfg.at("b").get<double>();
  CriticalConstants cc = critical_constants(b);
  const std::int64_t N = density_to_count(cfg, nullptr, L, cc.rho_c);
  const double alpha = cfg.at("alpha").get<double>();
  const std::int64_t beta = cfg.at("beta").get<std::int64_t>();
  const std::int64_t phi = cfg.value("phi", beta);
  const std::int64_t min_jumps = cfg.value("min_jumps", 2000);
  const std::int64_t per_run = cfg.value("max_jumps_per_run", 250);
  const double max_local_time = cfg.value("max_local_time", 1e18);
  const double tv_gate = cfg.value("tv_gate", 0.15);

  ModelParams mp = make_model_params(L, N, b);
  WellPartition wp = explicit_wells(alpha, beta, phi);
  const std::int64_t n_traj = (min_jumps + per_run - 1) / per_run;
  std::vector<TraceRecord> records(static_cast<std::size_t>(n_traj));
  parallel_for(n_traj, threads, [&](std::int64_t i) {
    RngStream rng(seed, kStreamJump + static_cast<std::uint64_t>(i));
    Configuration start = Configuration::condensate_at(L, N, 0);
    records[static_cast<std::size_t>(i)] =
        run_trace(mp, wp, start, max_local_time, per_run, rng);
  });

  CsvSink csv(out_dir, cfg, rep.name, "trajectory,entry,well,jump,dwell");
  std::vector<double> counts(static_cast<std::size_t>(L), 0.0);
  std::int64_t pooled = 0, pos = 0, neg = 0;
  for (std::int64_t i = 0; i < n_traj; ++i) {
    const auto& entries = records[static_cast<std::size_t>(i)].entries;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& e = entries[k];
      std::int64_t z = ((e.jump % L) + L) % L;
      counts[static_cast<std::size_t>(z)] += 1.0;
      ++pooled;
      if (2 * z != L) {
        if (e.jump > 0)
          ++pos;
        else
          ++neg;
      }
      csv.row(std::to_string(i) + "," + std::to_string(k) + "," + std::to_string(e.well) + "," +
              std::to_string(e.jump) + "," + fmt(e.dwell));
    }
  }

  /* normalized 1/(z(L-z)) reference law on displacements 1..L-1 */
  std::vector<double> law(static_cast<std::size_t>(L), 0.0);
  double norm = 0.0;
  for (std::int64_t z = 1; z < L; ++z) {
    law[static_cast<std::size_t>(z)] = 1.0 / (static_cast<double>(z) * static_cast<double>(L - z));
    norm += law[static_cast<std::size_t>(z)];
  }
  for (std::int64_t z = 1; z < L; ++z) law[static_cast<std::size_t>(z)] /= norm;

  rep.inconclusive = pooled < min_jumps;
  double tv = 0.0, sign_p = 1.0;
  double chi_p = 0.0;
  if (pooled > 0) {
    std::vector<double> emp(static_cast<std::size_t>(L), 0.0), expct(static_cast<std::size_t>(L), 0.0);
    for (std::int64_t z = 1; z < L; ++z) {
      emp[static_cast<std::size_t>(z)] = counts[static_cast<std::size_t>(z)] / static_cast<double>(pooled);
      expct[static_cast<std::size_t>(z)] = law[static_cast<std::size_t>(z)] * static_cast<double>(pooled);
    }
    tv = total_variation(std::span<const double>(emp).subspan(1),
                         std::span<const double>(law).subspan(1));
    ChiSquareResult cs = chi_square_test(std::span<const double>(counts).subspan(1),
                                         std::span<const double>(expct).subspan(1));
    chi_p = cs.pvalue;
    sign_p = binom_two_sided_p(pos, pos + neg);
  }
  bool tv_ok = tv <= tv_gate;
  bool sign_ok = sign_p > 0.01;
  rep.pass = rep.inconclusive ? false : (tv_ok && sign_ok);

  /* optional: exact hop-rate ratios on an enumerable system, logged next to
   * the 1/(z(L-z)) ratios; finite-size discrepancy reported, not gated */
  json exact_block;
  if (cfg.contains("exact_small_system")) {
    const auto& es = cfg.at("exact_small_system");
    std::int64_t sL = es.at("L").get<std::int64_t>();
    std::int64_t sN = es.at("N").get<std::int64_t>();
    double sb = es.at("b").get<double>();
    ModelParams smp = make_model_params(sL, sN, sb);
    WellPartition swp = explicit_wells(es.at("alpha").get<double>(), es.at("beta").get<std::int64_t>(),
                                       es.value("phi", es.at("beta").get<std::int64_t>()));
    WellSystem ws = build_well_system(smp, swp);
    std::vector<double> r = well_hop_rates_exact(ws, 0);
    double exact_ratio = r[1] / r[2];
    double law_ratio = (1.0 / (1.0 * static_cast<double>(sL - 1))) /
                       (1.0 / (2.0 * static_cast<double>(sL - 2)));
    exact_block = {{"L", sL},
                   {"N", sN},
                   {"b", sb},
                   {"rate_ratio_1_to_2", exact_ratio},
                   {"law_ratio_1_to_2", law_ratio},
                   {"relative_discrepancy", std::fabs(exact_ratio / law_ratio - 1.0)}};
  }
  rep.details = {{"L", L},
                 {"N", N},
                 {"b", b},
                 {"alpha", alpha},
                 {"beta", beta},
                 {"phi", phi},
                 {"pooled_jumps", pooled},
                 {"min_jumps", min_jumps},
                 {"tv_distance", tv},
                 {"tv_gate", tv_gate},
                 {"tv_pass", tv_ok},
                 {"chi_square_pvalue", chi_p},
                 {"sign_test_pvalue", sign_p},
                 {"sign_gate", 0.01},
                 {"sign_pass", sign_ok},
                 {"positive_jumps", pos},
                 {"negative_jumps", neg},
                 {"inconclusive", rep.inconclusive},
                 {"pass", rep.pass}};
  if (!exact_block.is_null()) rep.details["exact_small_system"] = exact_block;
  return rep;
}

StatReport exp_exit_time(const json& cfg, std::uint64_t seed, const std::string& out_dir,
                         int threads) {
  StatReport rep;
  rep.name = "exit_time";
  const double b = cfg.at("b").get<double>();
  const auto& cases = cfg.at("cases");
  const std::int64_t jumps = cfg.value("jumps_per_case", 60);
  const double band_limit = cfg.value("band_limit", 10.0);
  const std::int64_t n_cases = static_cast<std::int64_t>(cases.size());

  struct CaseOut {
    std::int64_t L = 0, N = 0;
    RunningStat dwell;
    bool positive = true;
    std::vector<double> samples;
  };
  std::vector<CaseOut> outs(static_cast<std::size_t>(n_cases));
  parallel_for(n_cases, threads, [&](std::int64_t c) {
    const auto& jc = cases[static_cast<std::size_t>(c)];
    std::int64_t L = jc.at("L").get<std::int64_t>();
    CriticalConstants cc = critical_constants(b);
    std::int64_t N = jc.contains("N") ? jc.at("N").get<std::int64_t>()
                                      : std::llround(2.0 * cc.rho_c * static_cast<double>(L));
    ModelParams mp = make_model_params(L, N, b);
    WellPartition wp = explicit_wells(jc.at("alpha").get<double>(), jc.at("beta").get<std::int64_t>(),
                                      jc.value("phi", jc.at("beta").get<std::int64_t>()));
    RngStream rng(seed, kStreamExit + static_cast<std::uint64_t>(c) * 10000);
    Configuration start = Configuration::condensate_at(L, N, 0);
    TraceRecord tr = run_trace(mp, wp, start, 1e18, jumps, rng);
    CaseOut& o = outs[static_cast<std::size_t>(c)];
    o.L = L;
    o.N = N;
    for (const auto& e : tr.entries) {
      o.dwell.add(e.dwell);
      o.samples.push_back(e.dwell);
      if (!(e.dwell > 0.0) || !std::isfinite(e.dwell)) o.positive = false;
    }
  });

  CsvSink csv(out_dir, cfg, rep.name, "L,entry,dwell");
  json per_case = json::array();
  double vmin = 1e300, vmax = 0.0;
  bool positive = true;
  for (const auto& o : outs) {
    for (std::size_t k = 0; k < o.samples.size(); ++k)
      csv.row(std::to_string(o.L) + "," + std::to_string(k) + "," + fmt(o.samples[k]));
    ModelParams mp = make_model_params(o.L, o.N, b);
    double v = o.dwell.mean * std::log(static_cast<double>(o.L)) / mp.theta;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
    positive &= o.positive && o.dwell.n > 0;
    double cv = o.dwell.mean > 0.0 ? o.dwell.stddev() / o.dwell.mean : 0.0;
    per_case.push_back({{"L", o.L},
                        {"N", o.N},
                        {"jumps", o.dwell.n},
                        {"mean_dwell", o.dwell.mean},
                        {"sem", o.dwell.sem()},
                        {"dwell_cv", cv},
                        {"dwell_logL_over_theta", v}});
  }
  double band = vmin > 0.0 ? vmax / vmin : 1e300;
  rep.pass = positive && band <= band_limit;
  rep.details = {{"b", b},
                 {"jumps_per_case", jumps},
                 {"cases", per_case},
                 {"band_ratio", band},
                 {"band_limit", band_limit},
                 {"all_dwells_positive", positive},
                 {"pass", rep.pass}};
  return rep;
}

StatReport exp_levy_limit(const json& cfg, std::uint64_t seed, const std::string& out_dir,
                          int threads) {
  StatReport rep;
  rep.name = "levy_limit";
  const double b = cfg.at("b").get<double>();
  CriticalConstants cc = critical_constants(b);
  const double rho = cfg.contains("rho") ? cfg.at("rho").get<double>()
                                         : cc.rho_c + cfg.value("rho_offset", 3.0);
  const double eps = cfg.value("eps", 1e-4);
  const double t_end = cfg.value("t", 0.1);
  const std::int64_t paths = cfg.value("paths", 100000);
  std::vector<std::int64_t> ks = cfg.value("k", std::vector<std::int64_t>{1, 2, 3});

  LevyParams lp = make_levy_params(b, rho, eps);
  const double rate = levy_total_rate(lp);

  std::vector<double> y_end(static_cast<std::size_t>(paths));
  std::vector<double> n_jumps(static_cast<std::size_t>(paths));
  parallel_for(paths, threads, [&](std::int64_t i) {
    RngStream rng(seed, kStreamLevy + static_cast<std::uint64_t>(i));
    auto path = sample_levy_path(lp, t_end, rng);
    y_end[static_cast<std::size_t>(i)] = path_position(path, t_end);
    n_jumps[static_cast<std::size_t>(i)] = static_cast<double>(path.size());
  });

  CsvSink csv(out_dir, cfg, rep.name, "path,jumps,y_t");
  for (std::int64_t i = 0; i < paths; ++i)
    csv.row(std::to_string(i) + "," +
            std::to_string(static_cast<std::int64_t>(n_jumps[static_cast<std::size_t>(i)])) + "," +
            fmt(y_end[static_cast<std::size_t>(i)]));

  bool all_ok = true;
  json per_k = json::array();
  constexpr double tau = 6.28318530717958647692;
  for (auto k : ks) {
    RunningStat s;
    for (auto y : y_end) s.add(std::cos(tau * static_cast<double>(k) * y));
    double target = std::exp(-char_exponent(k, lp) * t_end);
    bool ok = std::fabs(s.mean - target) <= 3.0 * s.sem();
    all_ok &= ok;
    per_k.push_back({{"k", k},
                     {"empirical", s.mean},
                     {"sem", s.sem()},
                     {"target", target},
                     {"abs_err", std::fabs(s.mean - target)},
                     {"gate", 3.0 * s.sem()},
                     {"pass", ok}});
  }
  RunningStat cnt;
  for (auto n : n_jumps) cnt.add(n);
  double count_target = rate * t_end;
  bool count_ok = std::fabs(cnt.mean - count_target) <= 3.0 * cnt.sem();
  all_ok &= count_ok;

  rep.pass = all_ok;
  rep.details = {{"b", b},
                 {"rho", rho},
                 {"eps", eps},
                 {"t", t_end},
                 {"paths", paths},
                 {"H", lp.H},
                 {"total_rate", rate},
                 {"char_function", per_k},
                 {"jump_count_mean", cnt.mean},
                 {"jump_count_target", count_target},
                 {"jump_count_sem", cnt.sem()},
                 {"jump_count_pass", count_ok},
                 {"discarded_variance", small_jump_discarded_variance(lp)},
                 {"pass", rep.pass}};
  return rep;
}

StatReport exp_coupling(const json& cfg, std::uint64_t seed, const std::string& out_dir,
                        int threads) {
  StatReport rep;
  rep.name = "coupling";
  const std::int64_t L = cfg.at("L").get<std::int64_t>();
  const double b = cfg.at("b").get<double>();
  CriticalConstants cc = critical_constants(b);
  const std::int64_t N = density_to_count(cfg, nullptr, L, cc.rho_c);
  const std::int64_t n_traj = cfg.value("trajectories", 1000);
  const double t_max = cfg.value("t_max", 50.0);
  const std::int64_t max_events = cfg.value("max_events", 1000000);
  const bool isolated = cfg.value("isolated", false);

  ModelParams mp = make_model_params(L, N, b);
  CriticalMarginal marginal = CriticalMarginal::make(b, N);
  ConvolutionTable table = build_convolution(marginal, L, N);
  const std::int64_t m = static_cast<std::int64_t>(std::ceil(std::pow(2.0, b)));

  struct Out {
    CouplingResult res;
    bool violated = false;
    std::string what;
  };
  std::vector<Out> outs(static_cast<std::size_t>(n_traj));
  parallel_for(n_traj, threads, [&](std::int64_t i) {
    RngStream rng(seed, kStreamCoupling + static_cast<std::uint64_t>(i));
    Configuration start = sample_canonical(marginal, table, L, N, rng);
    Out& o = outs[static_cast<std::size_t>(i)];
    try {
      o.res = coupling_run(mp, start, i % L, isolated, t_max, max_events, rng);
    } catch (const std::runtime_error& e) {
      o.violated = true;
      o.what = e.what();
    }
  });

  CsvSink csv(out_dir, cfg, rep.name, "trajectory,arrivals,events,census,max_arrival_rate");
  std::vector<double> ts, cs;
  double max_rate = 0.0;
  std::int64_t violations = 0;
  for (std::int64_t i = 0; i < n_traj; ++i) {
    const Out& o = outs[static_cast<std::size_t>(i)];
    if (o.violated) {
      ++violations;
      continue;
    }
    max_rate = std::max(max_rate, o.res.max_arrival_rate);
    for (const auto& [t, c] : o.res.census_curve) {
      ts.push_back(t);
      cs.push_back(static_cast<double>(c));
    }
    csv.row(std::to_string(i) + "," + std::to_string(o.res.arrivals) + "," +
            std::to_string(o.res.events) + "," + std::to_string(o.res.chain_census) + "," +
            fmt(o.res.max_arrival_rate));
  }
  LinearFit fit{0.0, 0.0, 0.0};
  if (ts.size() >= 2) fit = linear_fit(ts, cs);
  double slope_gate = static_cast<double>(m) * max_rate;
  bool slope_ok = fit.slope <= slope_gate;
  rep.pass = violations == 0 && slope_ok;
  rep.details = {{"L", L},
                 {"N", N},
                 {"b", b},
                 {"chains_per_generation", m},
                 {"trajectories", n_traj},
                 {"t_max", t_max},
                 {"violations", violations},
                 {"census_slope", fit.slope},
                 {"census_fit_r2", fit.r2},
                 {"slope_gate", slope_gate},
                 {"max_arrival_rate", max_rate},
                 {"pass", rep.pass}};
  if (violations > 0) {
    json v = json::array();
    for (const auto& o : outs)
      if (o.violated) v.push_back(o.what);
    rep.details["violation_states"] = v;
  }
  return rep;
}

StatReport exp_regularization(const json& cfg, const std::string& out_dir) {
  StatReport rep;
  rep.name = "regularization";
  const double b = cfg.at("b").get<double>();
  CriticalConstants cc = critical_constants(b);
  const double rho = cfg.contains("rho") ? cfg.at("rho").get<double>()
                                         : cc.rho_c + cfg.value("rho_offset", 3.0);
  std::vector<std::int64_t> Ls = cfg.at("L").get<std::vector<std::int64_t>>();
  LevyParams lp = make_levy_params(b, rho, 1e-4);
  constexpr double tau = 6.28318530717958647692;
  auto f = [](double u) { return std::cos(6.28318530717958647692 * u); };

  CsvSink csv(out_dir, cfg, rep.name, "L,ell,ell_bar,boxes,sup_error,identity_defect");
  json rows = json::array();
  std::vector<double> sups;
  bool defect_ok = true;
  for (auto L : Ls) {
    RegularizationScheme scheme = RegularizationScheme::make(L);
    std::vector<double> rates = proxy_hop_rates(lp, L);
    GeneratorCompareResult r = regularized_generator_compare(rates, f, scheme, lp);
    sups.push_back(r.sup_error);
    defect_ok &= r.identity_defect <= 1e-12;
    rows.push_back({{"L", L},
                    {"ell", scheme.ell},
                    {"ell_bar", scheme.ell_bar},
                    {"boxes", scheme.M_bar},
                    {"sup_error", r.sup_error},
                    {"identity_defect", r.identity_defect}});
    csv.row(std::to_string(L) + "," + std::to_string(scheme.ell) + "," +
            std::to_string(scheme.ell_bar) + "," + std::to_string(scheme.M_bar) + "," +
            fmt(r.sup_error) + "," + fmt(r.identity_defect));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < sups.size(); ++i) decreasing &= sups[i] < sups[i - 1];
  static_cast<void>(tau);
  rep.pass = decreasing && defect_ok;
  rep.details = {{"b", b},          {"rho", rho},
                 {"H", lp.H},       {"rows", rows},
                 {"strictly_decreasing", decreasing}, {"identity_defect_gate", 1e-12},
                 {"pass", rep.pass}};
  return rep;
}

StatReport exp_partition_shape(const json& cfg, const std::string& out_dir) {
  StatReport rep;
  rep.name = "partition_shape";
  const double b = cfg.at("b").get<double>();
  const double factor = cfg.value("rho_factor", 2.0);
  std::vector<std::int64_t> Ls = cfg.at("L").get<std::vector<std::int64_t>>();
  CriticalConstants cc = critical_constants(b);

  CsvSink csv(out_dir, cfg, rep.name, "L,N,relative_error");
  json rows = json::array();
  std::vector<double> errs;
  bool positive = true;
  for (auto L : Ls) {
    std::int64_t N = std::llround(factor * cc.rho_c * static_cast<double>(L));
    ModelParams mp = make_model_params(L, N, b);
    CriticalMarginal marginal = CriticalMarginal::make(b, N);
    ConvolutionTable table = build_convolution(marginal, L, N);
    double log_nu = table.log_prob(L, N);
    double log_pred = std::log(static_cast<double>(L)) - b * std::log(mp.n_tilde);
    double err = std::fabs(std::exp(std::log(cc.z_c) + log_nu - log_pred) - 1.0);
    positive &= err > 0.0 && std::isfinite(err);
    errs.push_back(err);
    rows.push_back({{"L", L}, {"N", N}, {"relative_error", err}});
    csv.row(std::to_string(L) + "," + std::to_string(N) + "," + fmt(err));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < errs.size(); ++i) decreasing &= errs[i] < errs[i - 1];
  bool fit_ok = true;
  double fitted_c = 0.0, predicted_last = 0.0;
  if (errs.size() >= 3) {
    fitted_c = 0.5 * (static_cast<double>(Ls[0]) * errs[0] + static_cast<double>(Ls[1]) * errs[1]);
    predicted_last = fitted_c / static_cast<double>(Ls.back());
    fit_ok = errs.back() <= 2.0 * predicted_last;
  }
  rep.pass = positive && decreasing && fit_ok;
  rep.details = {{"b", b},
                 {"rho_factor", factor},
                 {"rows", rows},
                 {"positive_finite", positive},
                 {"strictly_decreasing", decreasing},
                 {"inverse_L_coefficient", fitted_c},
                 {"predicted_last", predicted_last},
                 {"final_vs_fit_gate", 2.0},
                 {"fit_pass", fit_ok},
                 {"pass", rep.pass}};
  return rep;
}

StatReport exp_oracle_battery(const json& cfg, std::uint64_t seed, const std::string& out_dir) {
  StatReport rep;
  rep.name = "oracle_battery";
  const auto& cases = cfg.at("cases");
  CsvSink csv(out_dir, cfg, rep.name, "L,N,b,alpha,beta,pass");
  bool all = true;
  json per_case = json::array();
  std::uint64_t idx = 0;
  for (const auto& c : cases) {
    std::int64_t L = c.at(0).get<std::int64_t>();
    std::int64_t N = c.at(1).get<std::int64_t>();
    double b = c.at(2).get<double>();
    double alpha = c.at(3).get<double>();
    std::int64_t beta = c.at(4).get<std::int64_t>();
    BatteryReport br = cross_validate(L, N, b, alpha, beta, seed + 7000000 + idx);
    all &= br.pass;
    per_case.push_back(br.details);
    csv.row(std::to_string(L) + "," + std::to_string(N) + "," + fmt(b) + "," + fmt(alpha) + "," +
            std::to_string(beta) + "," + (br.pass ? "1" : "0"));
    ++idx;
  }
  rep.pass = all;
  rep.details = {{"cases", per_case}, {"pass", all}};
  return rep;
}

json default_suite_config() {
  return json{
      {"seed", 20260818},
      {"threads", 1},
      {"experiments",
       json::array(
           {{{"name", "oracle_battery"},
             {"cases", json::array({{2, 4, 3.0, 1.0, 1},
                                    {3, 6, 3.0, 1.0, 2},
                                    {3, 9, 4.0, 3.0, 3},
                                    {4, 8, 3.0, 2.0, 2},
                                    {5, 10, 3.0, 2.0, 2}})}},
            {{"name", "partition_shape"},
             {"b", 5.0},
             {"rho_factor", 2.0},
             {"L", json::array({20, 40, 80, 160})}},
            {{"name", "lln_condensate"}, {"b", 5.0}, {"rho_factor", 2.0}, {"L", 100}, {"draws", 10000}},
            {{"name", "jump_law"},
             {"L", 16},
             {"N", 18},
             {"b", 4.0},
             {"alpha", 4.0},
             {"beta", 4},
             {"min_jumps", 2000},
             {"max_jumps_per_run", 250},
             {"exact_small_system",
              {{"L", 5}, {"N", 10}, {"b", 3.0}, {"alpha", 2.0}, {"beta", 2}}}},
            {{"name", "exit_time"},
             {"b", 4.0},
             {"jumps_per_case", 60},
             {"band_limit", 10.0},
             {"cases", json::array({{{"L", 8}, {"N", 9}, {"alpha", 2.0}, {"beta", 2}},
                                    {{"L", 12}, {"N", 14}, {"alpha", 3.0}, {"beta", 3}},
                                    {{"L", 16}, {"N", 18}, {"alpha", 4.0}, {"beta", 4}}})}},
            {{"name", "levy_limit"},
             {"b", 2.5},
             {"rho_offset", 3.0},
             {"eps", 1e-4},
             {"t", 0.1},
             {"paths", 100000},
             {"k", json::array({1, 2, 3})}},
            {{"name", "coupling"},
             {"L", 16},
             {"N", 18},
             {"b", 4.0},
             {"trajectories", 1000},
             {"t_max", 50.0}},
            {{"name", "regularization"},
             {"b", 2.5},
             {"rho_offset", 3.0},
             {"L", json::array({512, 2048, 8192})}}})}};
}

json quick_suite_config() {
  return json{
      {"seed", 977201},
      {"threads", 1},
      {"experiments",
       json::array(
           {{{"name", "oracle_battery"},
             {"cases", json::array({{2, 4, 3.0, 1.0, 1}, {3, 6, 3.0, 1.0, 2}})}},
            {{"name", "partition_shape"},
             {"b", 5.0},
             {"rho_factor", 2.0},
             {"L", json::array({20, 40, 80})}},
            {{"name", "lln_condensate"}, {"b", 5.0}, {"rho_factor", 2.0}, {"L", 60}, {"draws", 2000}},
            {{"name", "jump_law"},
             {"L", 16},
             {"N", 18},
             {"b", 4.0},
             {"alpha", 4.0},
             {"beta", 4},
             {"min_jumps", 400},
             {"max_jumps_per_run", 100}},
            {{"name", "levy_limit"},
             {"b", 2.5},
             {"rho_offset", 3.0},
             {"eps", 1e-4},
             {"t", 0.1},
             {"paths", 20000},
             {"k", json::array({1, 2})}},
            {{"name", "coupling"},
             {"L", 16},
             {"N", 18},
             {"b", 4.0},
             {"trajectories", 200},
             {"t_max", 25.0}},
            {{"name", "regularization"},
             {"b", 2.5},
             {"rho_offset", 3.0},
             {"L", json::array({512, 2048})}}})}};
}

SuiteResult run_suite(const json& config, const std::string& out_dir) {
  SuiteResult suite;
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const int threads = config.value("threads", 1);
  const auto& exps = config.at("experiments");
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  bool all = true;
  std::int64_t idx = 0;
  for (const auto& block : exps) {
    json cfg = block;
    const std::string name = cfg.at("name").get<std::string>();
    cfg["file_base"] = std::to_string(idx) + "_" + name;
    StatReport rep;
    if (name == "lln_condensate")
      rep = exp_lln_condensate(cfg, seed, out_dir);
    else if (name == "jump_law")
      rep = exp_jump_law(cfg, seed, out_dir, threads);
    else if (name == "exit_time")
      rep = exp_exit_time(cfg, seed, out_dir, threads);
    else if (name == "levy_limit")
      rep = exp_levy_limit(cfg, seed, out_dir, threads);
    else if (name == "coupling")
      rep = exp_coupling(cfg, seed, out_dir, threads);
    else if (name == "regularization")
      rep = exp_regularization(cfg, out_dir);
    else if (name == "partition_shape")
      rep = exp_partition_shape(cfg, out_dir);
    else if (name == "oracle_battery")
      rep = exp_oracle_battery(cfg, seed, out_dir);
    else
      throw std::invalid_argument("run_suite: unknown experiment name '" + name + "'");
    all &= rep.pass || rep.inconclusive;
    if (!out_dir.empty()) {
      std::ofstream js(out_dir + "/" + cfg["file_base"].get<std::string>() + ".json",
                       std::ios::binary | std::ios::trunc);
      js << rep.details.dump(2) << '\n';
    }
    suite.reports.push_back(std::move(rep));
    ++idx;
  }
  suite.pass = all;
  json summary = json::array();
  for (const auto& r : suite.reports)
    summary.push_back({{"name", r.name}, {"pass", r.pass}, {"inconclusive", r.inconclusive}});
  suite.master = {{"pass", suite.pass}, {"seed", seed}, {"experiments", summary}};
  if (!out_dir.empty()) {
    std::ofstream js(out_dir + "/suite_report.json", std::ios::binary | std::ios::trunc);
    js << suite.master.dump(2) << '\n';
  }
  return suite;
}

}  // namespace zrp
