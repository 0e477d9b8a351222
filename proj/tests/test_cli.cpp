#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "support.hpp"

namespace fs = std::filesystem;
namespace ts = testsupport;
using Json = nlohmann::json;

namespace {

const std::string kCli = CAUSALQT_CLI_PATH;
const fs::path kScenarioDir = CAUSALQT_SCENARIO_DIR;

fs::path tmp_dir() {
  const fs::path dir = fs::temp_directory_path() / "causalqt_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_tmp(const std::string& name, const std::string& body) {
  const fs::path p = tmp_dir() / name;
  std::ofstream out(p);
  out << body;
  return p;
}

Json load_base_scenario() {
  std::ifstream in(kScenarioDir / "spacelike_singlet.json");
  return Json::parse(in);
}

std::string strip_timing(const std::string& record_text) {
  Json j = Json::parse(record_text);
  j.erase("timing_ms");
  return j.dump(2);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("shipped scenarios run with the documented exit codes") {
  auto run = [&](const char* name) {
    return ts::run_cli(kCli + " run " + (kScenarioDir / name).string());
  };

  const ts::CliResult spacelike = run("spacelike_singlet.json");
  CHECK(spacelike.exit_code == 0);
  const Json sj = Json::parse(spacelike.out);
  for (const auto& entry : sj.at("distribution"))
    CHECK(std::abs(entry.at("probability").get<double>() - 0.25) <= 2e-6);

  const ts::CliResult timelike = run("timelike_chain.json");
  CHECK(timelike.exit_code == 0);
  const Json tj = Json::parse(timelike.out);
  for (const auto& entry : tj.at("distribution")) {
    const auto& o = entry.at("outcomes");
    const double p = entry.at("probability").get<double>();
    if (o.at(0) == o.at(1)) {
      CHECK(p <= 2e-6);
    } else {
      CHECK(std::abs(p - 0.5) <= 2e-6);
    }
  }

  const ts::CliResult dead = run("zero_norm_demo.json");
  CHECK(dead.exit_code == 4);
  const Json dj = Json::parse(dead.out);
  CHECK(std::abs(dj.at("truncated_mass").get<double>() - 0.5) <= 1e-12);
  REQUIRE(dj.at("truncations").size() == 2);
  const Json expected_chain = Json::array(
      {Json{{"event", 0}, {"outcome", 0}}, Json{{"event", 1}, {"outcome", 0}}});
  CHECK(dj.at("truncations").at(0).at("chain") == expected_chain);

  const ts::CliResult soft = run("softened_escape.json");
  CHECK(soft.exit_code == 0);
  CHECK(Json::parse(soft.out).at("truncated_mass").get<double>() == 0.0);
}

TEST_CASE("validate accepts the shipped scenarios and reports their shape") {
  for (const char* name : {"spacelike_singlet.json", "timelike_chain.json",
                           "zero_norm_demo.json", "softened_escape.json"}) {
    const auto res = ts::run_cli(
        kCli + " validate " + (kScenarioDir / name).string(), true);
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("ok:") == 0);
  }
  // harness configs are not run scenarios
  const auto res = ts::run_cli(
      kCli + " validate " + (kScenarioDir / "chsh_standard.json").string(), true);
  CHECK(res.exit_code == 2);
}

TEST_CASE("malformed scenario files are rejected naming the offending field") {
  struct Mutation {
    std::string tag;
    std::function<void(Json&)> apply;
    std::string expect;  // substring the error must carry
  };

  const std::vector<Mutation> mutations = {
      {"missing_dims", [](Json& j) { j.erase("dims"); }, "dims"},
      {"missing_positions", [](Json& j) { j.erase("site_positions"); },
       "site_positions"},
      {"missing_initial", [](Json& j) { j.erase("initial"); }, "initial"},
      {"missing_events", [](Json& j) { j.erase("events"); }, "events"},
      {"missing_engine", [](Json& j) { j.erase("engine"); }, "engine"},
      {"missing_seed", [](Json& j) { j.erase("seed"); }, "seed"},
      {"missing_mode", [](Json& j) { j.erase("mode"); }, "mode"},
      {"unknown_key", [](Json& j) { j["surprise"] = 1; }, "surprise"},
      {"dims_empty", [](Json& j) { j["dims"] = Json::array(); }, "dims"},
      {"dims_too_small", [](Json& j) { j["dims"] = {2, 1}; }, "dims[1]"},
      {"dims_not_int", [](Json& j) { j["dims"] = {2, "two"}; }, "dims[1]"},
      {"dims_object", [](Json& j) { j["dims"] = Json::object(); }, "dims"},
      {"dims_overflow",
       [](Json& j) {
         j["dims"] = Json::array();
         for (int i = 0; i < 17; ++i) j["dims"].push_back(2);
       },
       "dims"},
      {"positions_count", [](Json& j) { j["site_positions"] = {{0, 0, 0}}; },
       "site_positions"},
      {"positions_len",
       [](Json& j) { j["site_positions"] = {{0, 0}, {1, 0, 0}}; },
       "site_positions[0]"},
      {"positions_text",
       [](Json& j) { j["site_positions"][1][0] = "far"; },
       "site_positions[1][0]"},
      {"initial_empty", [](Json& j) { j["initial"] = Json::object(); },
       "initial"},
      {"initial_two_kinds",
       [](Json& j) {
         j["initial"]["amplitudes"] = {{1.0, 0.0}, {0, 0}, {0, 0}, {0, 0}};
       },
       "initial"},
      {"initial_eps_range",
       [](Json& j) { j["initial"]["perturbed_singlet"]["eps"] = 0.7; },
       "initial.perturbed_singlet.eps"},
      {"amplitudes_short",
       [](Json& j) {
         j["initial"] = Json{{"amplitudes", {{1.0, 0.0}, {0.0, 0.0}}}};
       },
       "initial.amplitudes"},
      {"amplitudes_norm",
       [](Json& j) {
         j["initial"] =
             Json{{"amplitudes", {{0.9, 0.0}, {0, 0}, {0, 0}, {0, 0}}}};
       },
       "initial.amplitudes"},
      {"amplitudes_pair",
       [](Json& j) {
         j["initial"] =
             Json{{"amplitudes", {{1.0, 0.0, 0.0}, {0, 0}, {0, 0}, {0, 0}}}};
       },
       "initial.amplitudes[0]"},
      {"mixture_weights",
       [](Json& j) {
         j["initial"] = Json{
             {"mixture",
              Json::array(
                  {Json{{"weight", 0.5},
                        {"state", Json{{"perturbed_singlet", {{"eps", 0.0}}}}}},
                   Json{{"weight", 0.2},
                        {"state",
                         Json{{"perturbed_singlet", {{"eps", 0.0}}}}}}})}};
       },
       "initial.mixture"},
      {"mixture_nested",
       [](Json& j) {
         j["initial"] = Json{
             {"mixture",
              Json::array({Json{{"weight", 1.0},
                                {"state", Json{{"mixture", Json::array()}}}}})}};
       },
       "mixture"},
      {"events_not_array", [](Json& j) { j["events"] = 3; }, "events"},
      {"event_missing_site", [](Json& j) { j["events"][0].erase("site"); },
       "events[0].site"},
      {"event_missing_t", [](Json& j) { j["events"][1].erase("t"); },
       "events[1].t"},
      {"event_missing_kraus", [](Json& j) { j["events"][0].erase("kraus"); },
       "events[0].kraus"},
      {"event_site_range", [](Json& j) { j["events"][0]["site"] = 5; },
       "events[0].site"},
      {"event_t_zero", [](Json& j) { j["events"][0]["t"] = 0.0; }, "event"},
      {"event_unknown_key", [](Json& j) { j["events"][1]["speed"] = 3; },
       "events[1].speed"},
      {"kraus_empty", [](Json& j) { j["events"][0]["kraus"] = Json::object(); },
       "events[0].kraus"},
      {"kraus_two_kinds",
       [](Json& j) {
         j["events"][0]["kraus"]["softened"] = {{"theta", 0.0}, {"eta", 0.1}};
       },
       "events[0].kraus"},
      {"kraus_theta_missing",
       [](Json& j) { j["events"][0]["kraus"]["projective"] = Json::object(); },
       "events[0].kraus.projective.theta"},
      {"kraus_eta_range",
       [](Json& j) {
         j["events"][0]["kraus"] =
             Json{{"softened", {{"theta", 0.0}, {"eta", 1.2}}}};
       },
       "events[0].kraus.softened"},
      {"kraus_matrix_shape",
       [](Json& j) {
         j["events"][0]["kraus"] =
             Json{{"matrices", {{{{1.0, 0.0}}, {{0.0, 0.0}}}}}};
       },
       "events[0].kraus.matrices"},
      {"kraus_incomplete",
       [](Json& j) {
         // a single projector is not a complete set
         j["events"][0]["kraus"] = Json{
             {"matrices",
              {{{{1.0, 0.0}, {0.0, 0.0}}, {{0.0, 0.0}, {0.0, 0.0}}}}}};
       },
       "events[0].kraus.matrices"},
      {"duplicate_site_time",
       [](Json& j) {
         j["events"][1]["site"] = 0;
         j["events"][1].erase("x");
       },
       "event"},
      {"engine_value", [](Json& j) { j["engine"] = "quantum"; }, "engine"},
      {"engine_type", [](Json& j) { j["engine"] = 3; }, "engine"},
      {"seed_negative", [](Json& j) { j["seed"] = -1; }, "seed"},
      {"seed_text", [](Json& j) { j["seed"] = "entropy"; }, "seed"},
      {"mode_empty", [](Json& j) { j["mode"] = Json::object(); }, "mode"},
      {"mode_both",
       [](Json& j) { j["mode"]["sample"] = {{"trials", 10}}; }, "mode"},
      {"mode_trials_zero",
       [](Json& j) { j["mode"] = Json{{"sample", {{"trials", 0}}}}; },
       "mode.sample.trials"},
      {"mode_trials_text",
       [](Json& j) { j["mode"] = Json{{"sample", {{"trials", "many"}}}}; },
       "mode.sample.trials"},
      {"mode_exact_payload",
       [](Json& j) { j["mode"] = Json{{"exact", {{"x", 1}}}}; }, "mode.exact"},
  };

  for (const auto& m : mutations) {
    INFO(m.tag);
    Json j = load_base_scenario();
    m.apply(j);
    const fs::path p = write_tmp("mut_" + m.tag + ".json", j.dump(2));
    const auto res = ts::run_cli(kCli + " validate " + p.string(), true);
    CHECK(res.exit_code == 2);
    CHECK(res.out.find(m.expect) != std::string::npos);
  }

  // unparseable text is also a validation failure
  const fs::path garbled = write_tmp("mut_syntax.json", "{ not json");
  CHECK(ts::run_cli(kCli + " validate " + garbled.string()).exit_code == 2);
  CHECK(ts::run_cli(kCli + " validate /no/such/file.json").exit_code == 2);
}

TEST_CASE("sampling runs are reproducible byte for byte") {
  const std::string cmd = kCli + " run " +
                          (kScenarioDir / "timelike_chain.json").string() +
                          " --trials 5000 --seed 9 --threads 1";
  const auto a = ts::run_cli(cmd);
  const auto b = ts::run_cli(cmd);
  REQUIRE(a.exit_code == 0);
  CHECK(strip_timing(a.out) == strip_timing(b.out));

  const auto threaded = ts::run_cli(
      kCli + " run " + (kScenarioDir / "timelike_chain.json").string() +
      " --trials 5000 --seed 9 --threads 4");
  CHECK(strip_timing(a.out) == strip_timing(threaded.out));

  const auto other_seed = ts::run_cli(
      kCli + " run " + (kScenarioDir / "timelike_chain.json").string() +
      " --trials 5000 --seed 10 --threads 1");
  CHECK(strip_timing(a.out) != strip_timing(other_seed.out));
}

TEST_CASE("csv and json report identical numbers") {
  const fs::path csv = tmp_dir() / "run.csv";
  const auto res = ts::run_cli(
      kCli + " run " + (kScenarioDir / "spacelike_singlet.json").string() +
      " --csv " + csv.string());
  REQUIRE(res.exit_code == 0);
  const Json record = Json::parse(res.out);

  const std::string text = slurp(csv);
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "outcome_0,outcome_1,probability");
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::string& line = lines[row];
    const std::size_t last_comma = line.rfind(',');
    const double csv_p = std::stod(line.substr(last_comma + 1));
    const double json_p =
        record.at("distribution").at(row - 1).at("probability").get<double>();
    CHECK(csv_p == json_p);  // both formats round-trip the exact double
  }
}

TEST_CASE("oversized enumerations exit with the budget code") {
  Json j = load_base_scenario();
  j["dims"] = {2};
  j["site_positions"] = {{0.0, 0.0, 0.0}};
  j["initial"] = Json{{"amplitudes", {{1.0, 0.0}, {0.0, 0.0}}}};
  j["events"] = Json::array();
  for (int k = 0; k < 21; ++k)
    j["events"].push_back(Json{{"site", 0},
                               {"t", 1.0 + k},
                               {"kraus", Json{{"projective", {{"theta", 0.0}}}}}});
  const fs::path p = write_tmp("budget.json", j.dump(2));
  CHECK(ts::run_cli(kCli + " run " + p.string()).exit_code == 3);
  CHECK(ts::run_cli(kCli + " validate " + p.string()).exit_code == 0);
  CHECK(ts::run_cli(kCli + " run " + p.string() + " --trials 50").exit_code == 0);
}

TEST_CASE("bell subcommand reproduces the chsh bound from flags and config") {
  const auto from_config = ts::run_cli(
      kCli + " bell --config " + (kScenarioDir / "chsh_standard.json").string());
  REQUIRE(from_config.exit_code == 0);
  const double s_config =
      Json::parse(from_config.out).at("S").at("value").get<double>();
  CHECK(std::abs(s_config - 2.8284271247461903) <= 1e-9);

  const auto from_flags = ts::run_cli(
      kCli +
      " bell --engine standard --eps 0 --eta 0 --exact"
      " --delay-model deterministic --delta0 0 --seed 7");
  REQUIRE(from_flags.exit_code == 0);
  const double s_flags =
      Json::parse(from_flags.out).at("S").at("value").get<double>();
  CHECK(s_flags == s_config);

  // flag overrides win over the config file
  const auto overridden = ts::run_cli(
      kCli + " bell --config " + (kScenarioDir / "chsh_standard.json").string() +
      " --eta 0.5");
  const double s_soft =
      Json::parse(overridden.out).at("S").at("value").get<double>();
  CHECK(std::abs(s_soft - 0.25 * s_config) <= 1e-9);
}

TEST_CASE("sweep subcommand emits the frozen csv schema deterministically") {
  const std::string cmd = kCli + " sweep --config " +
                          (kScenarioDir / "loophole_sweep.json").string() +
                          " --threads 2";
  const auto a = ts::run_cli(cmd);
  REQUIRE(a.exit_code == 0);
  const auto b = ts::run_cli(cmd);
  CHECK(a.out == b.out);  // no timing in csv output

  REQUIRE(a.out.find(
              "param,value,p_spacelike,se_p_spacelike,S_direct,se_S_direct,"
              "S_mixture_prediction,E_ab,se_E_ab,E_abp,se_E_abp,E_apb,se_E_apb,"
              "E_apbp,se_E_apbp\n") == 0);
  CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 10);  // header + 9 rows

  // thread count must not alter the numbers
  const auto serial = ts::run_cli(
      kCli + " sweep --config " +
      (kScenarioDir / "loophole_sweep.json").string() + " --threads 1");
  CHECK(a.out == serial.out);

  // same sweep from bare flags
  const auto flags = ts::run_cli(
      kCli +
      " sweep --engine causal --eps 1e-3 --exact --trials 10000 --seed 11"
      " --delay-model exponential --rate 100 --param L --grid 1e-5:1e-1:9:log");
  CHECK(flags.exit_code == 0);
  CHECK(flags.out == a.out);
}

TEST_CASE("cli argument errors use exit code 2") {
  CHECK(ts::run_cli(kCli).exit_code == 2);
  CHECK(ts::run_cli(kCli + " frobnicate").exit_code == 2);
  CHECK(ts::run_cli(kCli + " run").exit_code == 2);
  CHECK(ts::run_cli(kCli + " --help").exit_code == 0);
  CHECK(ts::run_cli(kCli + " sweep --L 0.01").exit_code == 2);
  CHECK(ts::run_cli(kCli + " sweep --param L --grid nonsense").exit_code == 2);
  CHECK(ts::run_cli(kCli + " bell --config /no/such/file.json").exit_code == 2);
  CHECK(ts::run_cli(kCli + " bell --engine quantum").exit_code == 2);
  CHECK(ts::run_cli(kCli + " bell --exact --sampled").exit_code == 2);
  // causal with neither regularization knob set is rejected
  CHECK(ts::run_cli(kCli + " bell --engine causal --eps 0 --eta 0").exit_code ==
        2);
}
