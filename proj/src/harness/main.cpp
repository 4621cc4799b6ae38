#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zrp/chain.hpp"
#include "zrp/ensembles.hpp"
#include "zrp/experiments.hpp"
#include "zrp/kmc.hpp"
#include "zrp/levy.hpp"
#include "zrp/model.hpp"
#include "zrp/oracle.hpp"
#include "zrp/potential.hpp"
#include "zrp/rng.hpp"
#include "zrp/stats.hpp"

using nlohmann::json;
using namespace zrp;

namespace {

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

int cmd_simulate(std::int64_t L, std::int64_t N, double b, std::int64_t events, double t_max,
                 std::uint64_t seed, const std::string& out, const std::string& start_mode,
                 std::int64_t budget) {
  ModelParams mp = make_model_params(L, N, b);
  if (budget > 0) events = std::min(events, budget);
  RngStream rng(seed, 0);
  Configuration start;
  if (start_mode == "condensate") {
    start = Configuration::condensate_at(L, N, 0);
  } else if (start_mode == "canonical") {
    CriticalMarginal marginal = CriticalMarginal::make(b, N);
    ConvolutionTable table = build_convolution(marginal, L, N);
    start = sample_canonical(marginal, table, L, N, rng);
  } else {
    throw std::invalid_argument("simulate: --start must be condensate or canonical");
  }
  TrajectoryState st(start, b);
  std::ofstream csv;
  std::ostream* csv_ptr = nullptr;
  if (!out.empty()) {
    csv.open(out, std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open " + out);
    csv_ptr = &csv;  // run_events writes the header
  }
  RunSummary rs = run_events(st, events, t_max, rng, csv_ptr);
  std::int64_t mx = 0, mx_site = 0;
  for (std::int64_t x = 0; x < L; ++x)
    if (st.cfg.occ[static_cast<std::size_t>(x)] > mx) {
      mx = st.cfg.occ[static_cast<std::size_t>(x)];
      mx_site = x;
    }
  print({{"L", L},
         {"N", N},
         {"b", b},
         {"rho", mp.rho},
         {"start", start_mode},
         {"events", rs.events},
         {"elapsed", rs.elapsed},
         {"final_max", mx},
         {"final_max_site", mx_site},
         {"event_log", out}});
  return 0;
}

int cmd_trace(std::int64_t L, std::int64_t N, double b, double alpha, std::int64_t beta,
              std::int64_t phi, double local_time, std::int64_t max_jumps, std::uint64_t seed,
              const std::string& out) {
  ModelParams mp = make_model_params(L, N, b);
  WellPartition wp = explicit_wells(alpha, beta, phi);
  RngStream rng(seed, 0);
  std::ofstream csv;
  std::ostream* csv_ptr = nullptr;
  if (!out.empty()) {
    csv.open(out, std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open " + out);
    csv << "local_time,well,jump\n";
    csv_ptr = &csv;
  }
  TraceRecord tr =
      run_trace(mp, wp, Configuration::condensate_at(L, N, 0), local_time, max_jumps, rng, csv_ptr);
  RunningStat dwell;
  for (const auto& e : tr.entries) dwell.add(e.dwell);
  print({{"L", L},
         {"N", N},
         {"b", b},
         {"alpha", alpha},
         {"beta", beta},
         {"phi", phi},
         {"jumps", tr.entries.size()},
         {"local_time", tr.local_time},
         {"outside_time", tr.outside_time},
         {"final_well", tr.final_well},
         {"final_dwell", tr.final_dwell},
         {"events", tr.events},
         {"mean_dwell", dwell.mean},
         {"dwell_sem", dwell.sem()},
         {"theta", mp.theta},
         {"trace_log", out}});
  return 0;
}

int cmd_capacity_ring(std::int64_t ringL, std::int64_t x, std::int64_t y) {
  double closed = ring_capacity(ringL, x, y);
  ChainSpec chain = ring_chain(ringL);
  std::vector<std::int64_t> A{x}, B{y};
  CapacityResult cr = generic_capacity(chain, A, B);
  double defect = std::fabs(cr.cap - closed) / closed;
  bool ok = defect <= 1e-10 && cr.residual <= 1e-10;
  print({{"mode", "ring"},
         {"L", ringL},
         {"x", x},
         {"y", y},
         {"closed_form", closed},
         {"dirichlet_solve", cr.cap},
         {"relative_defect", defect},
         {"solve_residual", cr.residual},
         {"pass", ok}});
  return ok ? 0 : 1;
}

int cmd_capacity_edges(const std::string& file, const std::vector<std::int64_t>& A,
                       const std::vector<std::int64_t>& B) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open " + file);
  ChainSpec chain = read_edge_list(is);
  CapacityResult cr = generic_capacity(chain, A, B);
  bool ok = cr.residual <= 1e-8;
  print({{"mode", "edge_list"},
         {"file", file},
         {"states", chain.size()},
         {"reversibility_defect", chain.reversibility_defect()},
         {"capacity", cr.cap},
         {"solve_residual", cr.residual},
         {"pass", ok}});
  return ok ? 0 : 1;
}

int cmd_capacity_wells(std::int64_t L, std::int64_t N, double b, double alpha, std::int64_t beta,
                       std::int64_t phi, std::int64_t z, std::int64_t budget) {
  std::int64_t states = StateEnumeration::count(L, N);
  if (states > budget)
    throw std::invalid_argument("state space has " + std::to_string(states) +
                                " configurations, over the --budget cap " + std::to_string(budget));
  ModelParams mp = make_model_params(L, N, b);
  WellPartition wp = explicit_wells(alpha, beta, phi);
  WellSystem ws = build_well_system(mp, wp);
  IdentityCheck ic = rate_capacity_identity(ws, z);
  std::vector<double> r = well_hop_rates_exact(ws, 0);
  bool ok = ic.rel_err <= 1e-8;
  print({{"mode", "wells"},
         {"L", L},
         {"N", N},
         {"b", b},
         {"states", states},
         {"z", z},
         {"rate_times_mass", ic.lhs},
         {"capacity_combination", ic.rhs},
         {"relative_defect", ic.rel_err},
         {"hop_rates_from_0", r},
         {"pass", ok}});
  return ok ? 0 : 1;
}

int cmd_stats(const std::string& file, const std::string& column) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open " + file);
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("empty file " + file);
  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) names.push_back(tok);
  }
  std::int64_t col = -1;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == column) col = static_cast<std::int64_t>(i);
  if (col < 0) {
    try {
      col = std::stoll(column);
    } catch (...) {
      throw std::invalid_argument("column '" + column + "' not in header: " + header);
    }
    if (col < 0 || col >= static_cast<std::int64_t>(names.size()))
      throw std::invalid_argument("column index out of range: " + column);
  }
  RunningStat st;
  double lo = 1e300, hi = -1e300;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::int64_t i = 0;
    while (std::getline(ss, tok, ',')) {
      if (i == col) {
        double v = std::stod(tok);
        st.add(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        break;
      }
      ++i;
    }
  }
  print({{"file", file},
         {"column", names[static_cast<std::size_t>(col)]},
         {"count", st.n},
         {"mean", st.mean},
         {"stddev", st.stddev()},
         {"sem", st.sem()},
         {"min", st.n ? lo : 0.0},
         {"max", st.n ? hi : 0.0}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"condensing zero-range process: simulation, metastability, and scaling limits"};
  app.require_subcommand(1);

  /* simulate */
  auto* sim = app.add_subcommand("simulate", "run the jump process and report the endpoint");
  std::int64_t sim_L = 16, sim_N = 18, sim_events = 100000, sim_budget = 0;
  double sim_b = 4.0, sim_tmax = 1e300;
  std::uint64_t sim_seed = 1;
  std::string sim_out, sim_start = "condensate";
  sim->add_option("--L", sim_L, "number of sites")->required();
  sim->add_option("--N", sim_N, "number of particles")->required();
  sim->add_option("--b", sim_b, "rate-function exponent")->required();
  sim->add_option("--events", sim_events, "maximum number of events");
  sim->add_option("--t-max", sim_tmax, "stop once the clock passes this time");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--out", sim_out, "event log CSV path");
  sim->add_option("--start", sim_start, "condensate | canonical");
  sim->add_option("--budget", sim_budget, "hard cap on events (0 = off)");

  /* trace */
  auto* trc = app.add_subcommand("trace", "watch the condensate through the well filter");
  std::int64_t trc_L = 16, trc_N = 18, trc_beta = 4, trc_phi = -1, trc_jumps = 1000;
  double trc_b = 4.0, trc_alpha = 4.0, trc_lt = 1e18;
  std::uint64_t trc_seed = 1;
  std::string trc_out;
  trc->add_option("--L", trc_L, "number of sites")->required();
  trc->add_option("--N", trc_N, "number of particles")->required();
  trc->add_option("--b", trc_b, "rate-function exponent")->required();
  trc->add_option("--alpha", trc_alpha, "well depth margin")->required();
  trc->add_option("--beta", trc_beta, "background ceiling inside a well")->required();
  trc->add_option("--phi", trc_phi, "background ceiling for the extended set (default beta)");
  trc->add_option("--local-time", trc_lt, "stop once this much well-local time accrues");
  trc->add_option("--max-jumps", trc_jumps, "stop after this many recorded hops");
  trc->add_option("--seed", trc_seed, "master seed");
  trc->add_option("--out", trc_out, "trace log CSV path");

  /* capacity */
  auto* cap = app.add_subcommand("capacity", "potential-theoretic quantities, three modes");
  std::int64_t cap_ring = 0, cap_x = 0, cap_y = 1;
  std::string cap_chain;
  std::vector<std::int64_t> cap_A, cap_B;
  std::int64_t cap_L = 0, cap_N = 0, cap_beta = 1, cap_phi = -1, cap_z = 1, cap_budget = 500000;
  double cap_b = 3.0, cap_alpha = 1.0;
  cap->add_option("--ring", cap_ring, "ring size: closed form vs Dirichlet solve");
  cap->add_option("--x", cap_x, "ring source node");
  cap->add_option("--y", cap_y, "ring target node");
  cap->add_option("--chain", cap_chain, "edge-list file: generic capacity");
  cap->add_option("--source", cap_A, "source set states (edge-list mode)");
  cap->add_option("--target", cap_B, "target set states (edge-list mode)");
  cap->add_option("--L", cap_L, "sites (wells mode)");
  cap->add_option("--N", cap_N, "particles (wells mode)");
  cap->add_option("--b", cap_b, "rate-function exponent (wells mode)");
  cap->add_option("--alpha", cap_alpha, "well depth margin (wells mode)");
  cap->add_option("--beta", cap_beta, "background ceiling (wells mode)");
  cap->add_option("--phi", cap_phi, "extended-set ceiling (default beta)");
  cap->add_option("--z", cap_z, "well displacement for the rate identity");
  cap->add_option("--budget", cap_budget, "max enumerable configurations");

  /* oracle */
  auto* orc = app.add_subcommand("oracle", "exact cross-validation battery on a small system");
  std::int64_t orc_L = 3, orc_N = 6, orc_beta = 2, orc_budget = 500000;
  double orc_b = 3.0, orc_alpha = 1.0;
  std::uint64_t orc_seed = 1;
  orc->add_option("--L", orc_L, "number of sites")->required();
  orc->add_option("--N", orc_N, "number of particles")->required();
  orc->add_option("--b", orc_b, "rate-function exponent")->required();
  orc->add_option("--alpha", orc_alpha, "well depth margin")->required();
  orc->add_option("--beta", orc_beta, "background ceiling")->required();
  orc->add_option("--seed", orc_seed, "master seed");
  orc->add_option("--budget", orc_budget, "max enumerable configurations");

  /* levy */
  auto* lvy = app.add_subcommand("levy", "sample the limiting torus jump process");
  double lvy_b = 2.5, lvy_rho = -1.0, lvy_off = 3.0, lvy_eps = 1e-4, lvy_t = 0.1;
  std::int64_t lvy_paths = 100000;
  std::vector<std::int64_t> lvy_k{1, 2, 3};
  std::uint64_t lvy_seed = 1;
  std::string lvy_out;
  int lvy_threads = 1;
  lvy->add_option("--b", lvy_b, "rate-function exponent")->required();
  lvy->add_option("--rho", lvy_rho, "density (overrides --rho-offset)");
  lvy->add_option("--rho-offset", lvy_off, "density above the critical value");
  lvy->add_option("--eps", lvy_eps, "small-jump cutoff in (0, 1/2]");
  lvy->add_option("--t", lvy_t, "path horizon");
  lvy->add_option("--paths", lvy_paths, "number of sampled paths");
  lvy->add_option("--k", lvy_k, "Fourier modes to test");
  lvy->add_option("--seed", lvy_seed, "master seed");
  lvy->add_option("--out", lvy_out, "artifact directory");
  lvy->add_option("--threads", lvy_threads, "worker count");

  /* stats */
  auto* sts = app.add_subcommand("stats", "summarize one numeric column of a CSV artifact");
  std::string sts_file, sts_col = "0";
  sts->add_option("file", sts_file, "CSV path")->required();
  sts->add_option("--column", sts_col, "column name or 0-based index");

  /* suite */
  auto* sui = app.add_subcommand("suite", "run a configured experiment batch");
  std::string sui_config, sui_out = "suite_out";
  bool sui_emit = false, sui_quick = false;
  std::uint64_t sui_seed = 0;
  int sui_threads = 0;
  sui->add_option("--config", sui_config, "JSON config path (default: built-in batch)");
  sui->add_flag("--quick", sui_quick, "use the built-in reduced batch");
  sui->add_flag("--emit-default-config", sui_emit, "print the built-in config and exit");
  sui->add_option("--out", sui_out, "artifact directory");
  sui->add_option("--seed", sui_seed, "override the config seed");
  sui->add_option("--threads", sui_threads, "override the config worker count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(sim_L, sim_N, sim_b, sim_events, sim_tmax, sim_seed, sim_out, sim_start,
                          sim_budget);
    if (trc->parsed())
      return cmd_trace(trc_L, trc_N, trc_b, trc_alpha, trc_beta, trc_phi < 0 ? trc_beta : trc_phi,
                       trc_lt, trc_jumps, trc_seed, trc_out);
    if (cap->parsed()) {
      if (cap_ring > 0) return cmd_capacity_ring(cap_ring, cap_x, cap_y);
      if (!cap_chain.empty()) return cmd_capacity_edges(cap_chain, cap_A, cap_B);
      if (cap_L > 0)
        return cmd_capacity_wells(cap_L, cap_N, cap_b, cap_alpha, cap_beta,
                                  cap_phi < 0 ? cap_beta : cap_phi, cap_z, cap_budget);
      throw std::invalid_argument("capacity: pass --ring, --chain, or --L/--N/--b");
    }
    if (orc->parsed()) {
      std::int64_t states = StateEnumeration::count(orc_L, orc_N);
      if (states > orc_budget)
        throw std::invalid_argument("state space has " + std::to_string(states) +
                                    " configurations, over the --budget cap " +
                                    std::to_string(orc_budget));
      BatteryReport br = cross_validate(orc_L, orc_N, orc_b, orc_alpha, orc_beta, orc_seed);
      print(br.details);
      return br.pass ? 0 : 1;
    }
    if (lvy->parsed()) {
      json cfg{{"b", lvy_b}, {"eps", lvy_eps},     {"t", lvy_t},
               {"paths", lvy_paths}, {"k", lvy_k}, {"file_base", "levy"}};
      if (lvy_rho > 0)
        cfg["rho"] = lvy_rho;
      else
        cfg["rho_offset"] = lvy_off;
      StatReport rep = exp_levy_limit(cfg, lvy_seed, lvy_out, lvy_threads);
      print(rep.details);
      return rep.pass ? 0 : 1;
    }
    if (sts->parsed()) return cmd_stats(sts_file, sts_col);
    if (sui->parsed()) {
      if (sui_emit) {
        print(default_suite_config());
        return 0;
      }
      json config;
      if (!sui_config.empty()) {
        std::ifstream is(sui_config);
        if (!is) throw std::runtime_error("cannot open " + sui_config);
        config = json::parse(is);
      } else {
        config = sui_quick ? quick_suite_config() : default_suite_config();
      }
      if (sui->count("--seed")) config["seed"] = sui_seed;
      if (sui->count("--threads")) config["threads"] = sui_threads;
      SuiteResult result = run_suite(config, sui_out);
      print(result.master);
      return result.pass ? 0 : 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 2;
}
