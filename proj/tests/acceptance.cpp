/* Acceptance gate: nine pinned criteria, one PASS/FAIL line each.
 * Exit code 0 only when every criterion passes. */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrp/ensembles.hpp"
#include "zrp/experiments.hpp"
#include "zrp/kmc.hpp"
#include "zrp/levy.hpp"
#include "zrp/model.hpp"
#include "zrp/oracle.hpp"
#include "zrp/potential.hpp"

using namespace zrp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20260818;
constexpr int kThreads = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/* ---- criterion 1: exact identities on every enumerable case ---- */

Outcome criterion_exact_identities() {
  struct Case {
    std::int64_t L, N, beta;
    double b, alpha;
  };
  const Case cases[] = {{2, 4, 1, 3.0, 1.0},
                        {3, 6, 2, 3.0, 1.0},
                        {3, 9, 3, 4.0, 3.0},
                        {4, 8, 2, 3.0, 2.0},
                        {5, 10, 2, 3.0, 2.0}};
  const double tol_stationary = 1e-10, tol_balance = 1e-12, tol_trace = 1e-10;
  const double tol_identity = 1e-8, tol_ring = 1e-12, tol_bd = 1e-8;

  double w_stat = 0.0, w_bal = 0.0, w_trace = 0.0, w_id = 0.0, w_ring = 0.0, w_bd = 0.0;
  for (const Case& c : cases) {
    StateEnumeration se = enumerate_states(c.L, c.N);
    auto Q = generator_matrix(se, c.b);
    std::vector<double> st = stationary_exact(Q);
    std::vector<double> mu = canonical_probabilities(se, c.b);
    for (std::size_t i = 0; i < st.size(); ++i)
      w_stat = std::max(w_stat, std::fabs(st[i] - mu[i]));

    w_bal = std::max(w_bal, zrp_chain(se, c.b).reversibility_defect());

    ModelParams mp = make_model_params(c.L, c.N, c.b);
    WellSystem ws = build_well_system(mp, explicit_wells(c.alpha, c.beta, c.beta));
    w_trace = std::max(w_trace, ws.trace.reversibility_defect());
    for (std::int64_t z = 1; z < c.L; ++z)
      w_id = std::max(w_id, rate_capacity_identity(ws, z).rel_err);

    ChainSpec ring = ring_chain(c.L);
    for (std::int64_t x = 0; x < c.L; ++x)
      for (std::int64_t y = x + 1; y < c.L; ++y) {
        std::vector<std::int64_t> A{x}, B{y};
        double closed = ring_capacity(c.L, x, y);
        double solved = generic_capacity(ring, A, B).cap;
        w_ring = std::max(w_ring, std::fabs(solved - closed) / closed);
      }

    JumpRateTable rt(c.b, c.N + 8);
    for (std::int64_t x : {std::int64_t{0}, c.N / 2}) {
      double closed = bd_expected_hitting(x, c.N, rt);
      double solved = bd_hitting_solve(x, c.N, rt);
      w_bd = std::max(w_bd, std::fabs(solved - closed) / closed);
    }
  }

  Outcome out;
  out.pass = w_stat <= tol_stationary && w_bal <= tol_balance && w_trace <= tol_trace &&
             w_id <= tol_identity && w_ring <= tol_ring && w_bd <= tol_bd;
  out.detail = "stationary " + num(w_stat) + "<=1e-10, balance " + num(w_bal) +
               "<=1e-12, trace " + num(w_trace) + "<=1e-10, rate-capacity " + num(w_id) +
               "<=1e-8, ring " + num(w_ring) + "<=1e-12, hitting " + num(w_bd) + "<=1e-8";
  return out;
}

/* ---- criterion 2: closed-form vs quadrature rate integral ---- */

Outcome criterion_beta_integral() {
  const double tol = 1e-10;
  double worst = 0.0;
  for (double b : {1.0, 2.0, 3.0, 4.0, 5.0, 7.5})
    worst = std::max(worst, std::fabs(beta_integral(b) - beta_integral_quadrature(b)));
  double exact1 = std::fabs(beta_integral(1.0) - 1.0 / 6.0);
  double exact2 = std::fabs(beta_integral(2.0) - 1.0 / 30.0);
  Outcome out;
  out.pass = worst <= tol && exact1 <= 1e-15 && exact2 <= 1e-15;
  out.detail = "six exponents, |closed-quadrature| " + num(worst) + "<=1e-10, I(1)-1/6 " +
               num(exact1) + ", I(2)-1/30 " + num(exact2);
  return out;
}

/* ---- criterion 3: partition asymptote error decays like 1/L ---- */

Outcome criterion_partition_shape() {
  CriticalConstants cc = critical_constants(5.0);
  const std::int64_t Ls[] = {20, 40, 80, 160};
  std::vector<double> errs;
  for (std::int64_t L : Ls) {
    std::int64_t N = std::llround(2.0 * cc.rho_c * static_cast<double>(L));
    ModelParams mp = make_model_params(L, N, 5.0);
    CriticalMarginal marginal = CriticalMarginal::make(5.0, N);
    ConvolutionTable table = build_convolution(marginal, L, N);
    double log_pred = std::log(static_cast<double>(L)) - 5.0 * std::log(mp.n_tilde);
    errs.push_back(std::fabs(std::exp(std::log(cc.z_c) + table.log_prob(L, N) - log_pred) - 1.0));
  }
  bool positive = true, decreasing = true;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    positive &= errs[i] > 0.0 && std::isfinite(errs[i]);
    if (i) decreasing &= errs[i] < errs[i - 1];
  }
  double fit_c = 0.5 * (20.0 * errs[0] + 40.0 * errs[1]);
  bool fit_ok = errs.back() <= 2.0 * fit_c / 160.0;
  Outcome out;
  out.pass = positive && decreasing && fit_ok;
  out.detail = "errors " + num(errs[0]) + " > " + num(errs[1]) + " > " + num(errs[2]) + " > " +
               num(errs[3]) + ", final <= 2*fit " + num(2.0 * fit_c / 160.0);
  return out;
}

/* ---- criteria 4..8 delegate to the harness experiments ---- */

Outcome criterion_lln() {
  json cfg{{"name", "lln_condensate"}, {"b", 5.0}, {"rho_factor", 2.0}, {"L", 100}, {"draws", 10000}};
  StatReport rep = exp_lln_condensate(cfg, kSeed, "");
  Outcome out;
  out.pass = rep.pass;
  out.detail = "bias " + num(rep.details["bias"].get<double>()) + " <= gate " +
               num(rep.details["gate"].get<double>()) + " (3 s.e. + default-scale allowance)";
  return out;
}

Outcome criterion_jump_law() {
  json cfg{{"name", "jump_law"}, {"L", 16},           {"N", 18},
           {"b", 4.0},           {"alpha", 4.0},      {"beta", 4},
           {"min_jumps", 2000},  {"max_jumps_per_run", 250}};
  StatReport rep = exp_jump_law(cfg, kSeed, "", kThreads);
  Outcome out;
  out.pass = rep.pass && !rep.inconclusive;
  out.detail = std::to_string(rep.details["pooled_jumps"].get<std::int64_t>()) +
               " jumps, TV " + num(rep.details["tv_distance"].get<double>()) +
               "<=0.15, sign p " + num(rep.details["sign_test_pvalue"].get<double>()) + ">0.01";
  return out;
}

Outcome criterion_levy() {
  json cfg{{"name", "levy_limit"}, {"b", 2.5}, {"rho_offset", 3.0}, {"eps", 1e-4},
           {"t", 0.1},             {"paths", 100000}, {"k", json::array({1, 2, 3})}};
  StatReport rep = exp_levy_limit(cfg, kSeed, "", kThreads);
  Outcome out;
  out.pass = rep.pass;
  std::string ks;
  for (const auto& row : rep.details["char_function"])
    ks += " k=" + std::to_string(row["k"].get<std::int64_t>()) + ":" +
          num(row["abs_err"].get<double>()) + "<=" + num(row["gate"].get<double>());
  out.detail = "char function within 3 s.e. of exp(-psi t):" + ks + "; count mean " +
               num(rep.details["jump_count_mean"].get<double>()) + " vs " +
               num(rep.details["jump_count_target"].get<double>());
  return out;
}

Outcome criterion_coupling() {
  json cfg{{"name", "coupling"}, {"L", 16}, {"N", 18}, {"b", 4.0},
           {"trajectories", 1000}, {"t_max", 50.0}};
  StatReport rep = exp_coupling(cfg, kSeed, "", kThreads);
  Outcome out;
  out.pass = rep.pass;
  out.detail = "violations " + std::to_string(rep.details["violations"].get<std::int64_t>()) +
               " (must be 0), census slope " + num(rep.details["census_slope"].get<double>()) +
               " <= " + num(rep.details["slope_gate"].get<double>());
  return out;
}

Outcome criterion_regularization() {
  json cfg{{"name", "regularization"}, {"b", 2.5}, {"rho_offset", 3.0},
           {"L", json::array({512, 2048, 8192})}};
  StatReport rep = exp_regularization(cfg, "");
  Outcome out;
  out.pass = rep.pass;
  std::string es;
  for (const auto& row : rep.details["rows"])
    es += (es.empty() ? "" : " > ") + num(row["sup_error"].get<double>());
  out.detail = "sup errors strictly decreasing over L in {512, 2048, 8192}: " + es;
  return out;
}

/* ---- criterion 9: byte-identical artifacts on re-run ---- */

std::map<std::string, std::string> slurp_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome criterion_determinism() {
  json cfg = quick_suite_config();
  fs::path da = fs::temp_directory_path() / "zrp_acceptance_run_a";
  fs::path db = fs::temp_directory_path() / "zrp_acceptance_run_b";
  fs::remove_all(da);
  fs::remove_all(db);
  run_suite(cfg, da.string());
  run_suite(cfg, db.string());
  auto fa = slurp_dir(da), fb = slurp_dir(db);
  bool same = !fa.empty() && fa.size() == fb.size();
  std::int64_t csvs = 0;
  if (same)
    for (const auto& [name, content] : fa) {
      auto it = fb.find(name);
      same = it != fb.end() && it->second == content;
      if (!same) break;
      if (name.size() > 4 && name.substr(name.size() - 4) == ".csv") ++csvs;
    }
  fs::remove_all(da);
  fs::remove_all(db);
  Outcome out;
  out.pass = same && csvs > 0;
  out.detail = same ? std::to_string(fa.size()) + " artifacts (" + std::to_string(csvs) +
                          " csv) byte-identical across re-run"
                    : "artifact mismatch between identically seeded runs";
  return out;
}

}  // namespace

int main() {
  struct Row {
    const char* label;
    std::function<Outcome()> fn;
  };
  const Row rows[] = {
      {"criterion 1 (exact identities)", criterion_exact_identities},
      {"criterion 2 (rate integral)", criterion_beta_integral},
      {"criterion 3 (partition shape)", criterion_partition_shape},
      {"criterion 4 (condensate fraction LLN)", criterion_lln},
      {"criterion 5 (jump law)", criterion_jump_law},
      {"criterion 6 (limit process)", criterion_levy},
      {"criterion 7 (domination coupling)", criterion_coupling},
      {"criterion 8 (regularized generator)", criterion_regularization},
      {"criterion 9 (determinism)", criterion_determinism},
  };
  int failed = 0;
  for (const Row& r : rows) {
    Outcome o;
    try {
      o = r.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s: %s | %s\n", r.label, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("acceptance: %d/9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
