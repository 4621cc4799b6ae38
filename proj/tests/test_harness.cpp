#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "zrp/experiments.hpp"

using namespace zrp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKnownNames{"oracle_battery", "partition_shape", "lln_condensate",
                                        "jump_law",       "exit_time",       "levy_limit",
                                        "coupling",       "regularization"};

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

fs::path fresh_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("zrp_harness_") + tag);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("shipped suite configurations are well formed") {
  for (const json& cfg : {default_suite_config(), quick_suite_config()}) {
    CHECK(cfg.contains("seed"));
    CHECK(cfg.contains("threads"));
    REQUIRE(cfg.contains("experiments"));
    CHECK(!cfg["experiments"].empty());
    for (const auto& block : cfg["experiments"]) {
      REQUIRE(block.contains("name"));
      CHECK(kKnownNames.count(block["name"].get<std::string>()) == 1);
    }
  }
  /* the full configuration exercises every experiment at least once */
  std::set<std::string> seen;
  const json full = default_suite_config();
  for (const auto& block : full["experiments"]) seen.insert(block["name"].get<std::string>());
  CHECK(seen == kKnownNames);
}

TEST_CASE("suite runner: empty list passes, unknown names are refused") {
  json empty{{"seed", 1}, {"experiments", json::array()}};
  SuiteResult r = run_suite(empty, "");
  CHECK(r.pass);
  CHECK(r.reports.empty());
  CHECK(r.master["experiments"].empty());

  json bad{{"seed", 1}, {"experiments", json::array({{{"name", "no_such_experiment"}}})}};
  CHECK_THROWS_AS(run_suite(bad, ""), std::invalid_argument);
}

TEST_CASE("exact consistency battery experiment on the smallest system") {
  json cfg{{"name", "oracle_battery"}, {"cases", json::array({{2, 4, 3.0, 1.0, 1}})}};
  StatReport rep = exp_oracle_battery(cfg, 42, "");
  CHECK(rep.name == "oracle_battery");
  CHECK(rep.pass);
  CHECK(!rep.inconclusive);
  REQUIRE(rep.details.contains("cases"));
  CHECK(rep.details["cases"].size() == 1);
  CHECK(rep.details["cases"][0]["pass"].get<bool>());
}

TEST_CASE("partition shape experiment: decreasing errors and csv artifact") {
  fs::path dir = fresh_dir("pshape");
  json cfg{{"name", "partition_shape"},
           {"b", 5.0},
           {"rho_factor", 2.0},
           {"L", json::array({20, 40, 80})}};
  StatReport rep = exp_partition_shape(cfg, dir.string());
  CHECK(rep.pass);
  REQUIRE(rep.details.contains("rows"));
  double prev = 1e300;
  for (const auto& row : rep.details["rows"]) {
    double e = row["relative_error"].get<double>();
    CHECK(e > 0.0);
    CHECK(e < prev);
    prev = e;
  }

  std::ifstream in(dir / "partition_shape.csv");
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "L,N,relative_error");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
  fs::remove_all(dir);
}

TEST_CASE("condensate fraction bias shrinks with the lattice") {
  json base{{"name", "lln_condensate"}, {"b", 5.0}, {"rho_factor", 2.0}, {"draws", 2000}};
  json small = base, large = base;
  small["L"] = 50;
  large["L"] = 200;
  StatReport a = exp_lln_condensate(small, 1234, "");
  StatReport c = exp_lln_condensate(large, 1234, "");
  CHECK(a.pass);
  CHECK(c.pass);
  double bias_small = a.details["bias"].get<double>();
  double bias_large = c.details["bias"].get<double>();
  double slack = 2.0 * (a.details["sem"].get<double>() + c.details["sem"].get<double>());
  CHECK(bias_large <= bias_small + slack);
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
  json cfg{{"seed", 555},
           {"threads", 1},
           {"experiments",
            json::array({{{"name", "oracle_battery"}, {"cases", json::array({{2, 4, 3.0, 1.0, 1}})}},
                         {{"name", "partition_shape"},
                          {"b", 5.0},
                          {"rho_factor", 2.0},
                          {"L", json::array({20, 40})}},
                         {{"name", "lln_condensate"},
                          {"b", 5.0},
                          {"rho_factor", 2.0},
                          {"L", 40},
                          {"draws", 500}}})}};
  fs::path da = fresh_dir("det_a"), db = fresh_dir("det_b");
  SuiteResult ra = run_suite(cfg, da.string());
  SuiteResult rb = run_suite(cfg, db.string());
  CHECK(ra.pass == rb.pass);

  auto fa = slurp_dir(da), fb = slurp_dir(db);
  REQUIRE(!fa.empty());
  REQUIRE(fa.size() == fb.size());
  for (const auto& [name, content] : fa) {
    REQUIRE(fb.count(name) == 1);
    CHECK(content == fb[name]);
  }
  /* expected artifact inventory: one csv + one json per experiment + master */
  CHECK(fa.count("suite_report.json") == 1);
  CHECK(fa.count("0_oracle_battery.csv") == 1);
  CHECK(fa.count("0_oracle_battery.json") == 1);
  CHECK(fa.count("1_partition_shape.csv") == 1);
  CHECK(fa.count("2_lln_condensate.csv") == 1);
  fs::remove_all(da);
  fs::remove_all(db);
}
