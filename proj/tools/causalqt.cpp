// Command-line front end.
//
//   causalqt run <scenario.json> [overrides]   exact or sampled outcome runs
//   causalqt bell [--config FILE] [flags]      one CHSH evaluation
//   causalqt sweep [--config FILE] [flags]     CHSH vs separation or rate
//   causalqt validate <scenario.json>          parse + validate only
//
// Exit codes: 0 success, 2 invalid input or parameters, 3 enumeration
// budget exceeded, 4 a reduction chain annihilated the state (the run or
// record carries the offending chain).

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "causalqt/bell.hpp"
#include "causalqt/engine.hpp"
#include "causalqt/errors.hpp"
#include "causalqt/parallel.hpp"
#include "causalqt/scenario_io.hpp"

namespace cq = causalqt;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw cq::ValidationError(path, "cannot open file for writing");
  out << body;
}

cq::EngineKind parse_engine_flag(const std::string& s) {
  if (s == "causal") return cq::EngineKind::Causal;
  if (s == "standard") return cq::EngineKind::Standard;
  throw cq::ValidationError("--engine", "expected \"causal\" or \"standard\"");
}

// ── run ───────────────────────────────────────────────────────────────────

struct RunCli {
  std::string scenario_path;
  std::string engine_str;
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  bool force_exact = false;
  int threads = 1;
  std::string csv_path;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* engine_opt = nullptr;
};

int do_run(const RunCli& cli) {
  const auto t0 = std::chrono::steady_clock::now();
  cq::RunSpec spec = cq::load_scenario(cli.scenario_path);
  if (cli.engine_opt->count() > 0) spec.engine = parse_engine_flag(cli.engine_str);
  if (cli.seed_opt->count() > 0) spec.seed = cli.seed;
  if (cli.trials_opt->count() > 0) {
    if (cli.trials == 0)
      throw cq::ValidationError("--trials", "trials must be > 0");
    spec.exact = false;
    spec.trials = cli.trials;
  }
  if (cli.force_exact) spec.exact = true;

  if (spec.exact) {
    const cq::OutcomeDistribution dist =
        cq::distribution(spec.scenario, spec.engine);
    const cq::Json record = cq::run_record(spec, cli.scenario_path,
                                           cq::distribution_json(dist),
                                           ms_since(t0));
    std::cout << record.dump(2) << "\n";
    if (!cli.csv_path.empty()) write_file(cli.csv_path, cq::run_csv(dist));
    if (dist.truncated_mass > 0.0) {
      std::cerr << "warning: " << cq::format_double(dist.truncated_mass)
                << " of the outcome mass annihilated; chains are listed in the "
                   "record\n";
      return 4;
    }
    return 0;
  }

  const cq::SampleCounts counts = cq::sample_many(
      spec.scenario, spec.engine, spec.seed, spec.trials, cli.threads);
  const cq::Json record = cq::run_record(spec, cli.scenario_path,
                                         cq::counts_json(counts), ms_since(t0));
  std::cout << record.dump(2) << "\n";
  if (!cli.csv_path.empty()) write_file(cli.csv_path, cq::run_csv(counts));
  return 0;
}

// ── bell / sweep ──────────────────────────────────────────────────────────

struct BellCli {
  std::string config_path;
  std::string engine_str;
  double separation = 0, eps = 0, eta = 0, arrival = 0;
  std::vector<double> angles;
  std::string delay_family;
  std::vector<double> delta0, rate;
  bool exact_flag = false, sampled_flag = false;
  std::uint64_t trials = 0, seed = 0;
  int threads = 1;
  std::string csv_path;
  std::string param_str;
  std::string grid_str;
  bool json_out = false;

  CLI::Option *engine_opt = nullptr, *sep_opt = nullptr, *eps_opt = nullptr,
              *eta_opt = nullptr, *arrival_opt = nullptr, *angles_opt = nullptr,
              *family_opt = nullptr, *delta0_opt = nullptr, *rate_opt = nullptr,
              *trials_opt = nullptr, *seed_opt = nullptr, *param_opt = nullptr,
              *grid_opt = nullptr;
};

void add_bell_flags(CLI::App* cmd, BellCli& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  f.engine_opt = cmd->add_option("--engine", f.engine_str,
                                 "engine: causal or standard");
  f.sep_opt = cmd->add_option("--L", f.separation,
                              "wing separation in light seconds");
  f.eps_opt = cmd->add_option("--eps", f.eps, "singlet perturbation");
  f.eta_opt = cmd->add_option("--eta", f.eta, "reduction softening");
  f.arrival_opt = cmd->add_option("--arrival", f.arrival,
                                  "nominal arrival time in seconds");
  f.angles_opt = cmd->add_option("--angles", f.angles,
                                 "analyzer angles a,a',b,b' in radians")
                     ->delimiter(',')
                     ->expected(4);
  f.family_opt = cmd->add_option("--delay-model", f.delay_family,
                                 "delay family: deterministic or exponential");
  f.delta0_opt = cmd->add_option("--delta0", f.delta0,
                                 "fixed delay, one value or wing_a,wing_b")
                     ->delimiter(',')
                     ->expected(1, 2);
  f.rate_opt = cmd->add_option("--rate", f.rate,
                               "exponential delay rate, one value or pair")
                   ->delimiter(',')
                   ->expected(1, 2);
  cmd->add_flag("--exact", f.exact_flag, "evaluate correlations exactly");
  cmd->add_flag("--sampled", f.sampled_flag, "estimate correlations by sampling");
  f.trials_opt = cmd->add_option("--trials", f.trials, "trials per correlation");
  f.seed_opt = cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd->add_option("--csv", f.csv_path, "also write results to this CSV file");
}

void apply_delay_flags(const BellCli& f, cq::BellConfig& cfg) {
  if (f.family_opt->count() > 0) {
    cq::DelayFamily fam;
    if (f.delay_family == "deterministic") {
      fam = cq::DelayFamily::Deterministic;
    } else if (f.delay_family == "exponential") {
      fam = cq::DelayFamily::Exponential;
    } else {
      throw cq::ValidationError("--delay-model",
                                "expected \"deterministic\" or \"exponential\"");
    }
    cfg.delay_a.family = cfg.delay_b.family = fam;
  }
  if (f.delta0_opt->count() > 0) {
    cfg.delay_a.delta0 = f.delta0.front();
    cfg.delay_b.delta0 = f.delta0.back();
  }
  if (f.rate_opt->count() > 0) {
    cfg.delay_a.rate = f.rate.front();
    cfg.delay_b.rate = f.rate.back();
  }
}

cq::BellConfig build_bell_config(const BellCli& f, cq::SweepSpec* sweep) {
  cq::BellConfig cfg;
  if (!f.config_path.empty()) {
    const cq::Json j = cq::load_json_file(f.config_path);
    if (sweep) {
      auto [c, s] = cq::parse_sweep_config(j);
      cfg = c;
      *sweep = s;
    } else {
      cfg = cq::parse_bell_config(j);
    }
  } else if (sweep) {
    if (f.param_opt->count() == 0 || f.grid_opt->count() == 0)
      throw cq::ValidationError("--param/--grid",
                                "required when no --config file is given");
  }

  if (f.engine_opt->count() > 0) cfg.engine = parse_engine_flag(f.engine_str);
  if (f.sep_opt->count() > 0) cfg.separation = f.separation;
  if (f.eps_opt->count() > 0) cfg.eps = f.eps;
  if (f.eta_opt->count() > 0) cfg.eta = f.eta;
  if (f.arrival_opt->count() > 0) cfg.arrival_time = f.arrival;
  if (f.angles_opt->count() > 0) {
    cfg.angle_a = f.angles[0];
    cfg.angle_ap = f.angles[1];
    cfg.angle_b = f.angles[2];
    cfg.angle_bp = f.angles[3];
  }
  apply_delay_flags(f, cfg);
  if (f.exact_flag && f.sampled_flag)
    throw cq::ValidationError("--exact/--sampled", "mutually exclusive");
  if (f.exact_flag) cfg.exact = true;
  if (f.sampled_flag) cfg.exact = false;
  if (f.trials_opt->count() > 0) cfg.trials = f.trials;
  if (f.seed_opt->count() > 0) cfg.seed = f.seed;
  cfg.threads = f.threads;

  if (sweep) {
    if (f.param_opt->count() > 0) {
      if (f.param_str == "separation" || f.param_str == "L") {
        sweep->param = cq::SweepParam::SeparationL;
      } else if (f.param_str == "rate" || f.param_str == "lambda") {
        sweep->param = cq::SweepParam::DelayRate;
      } else {
        throw cq::ValidationError("--param", "expected separation|L|rate|lambda");
      }
    }
    if (f.grid_opt->count() > 0) {
      // start:stop:steps[:scale]
      std::vector<std::string> parts;
      std::string cur;
      for (char c : f.grid_str) {
        if (c == ':') {
          parts.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      parts.push_back(cur);
      if (parts.size() != 3 && parts.size() != 4)
        throw cq::ValidationError("--grid", "expected start:stop:steps[:scale]");
      cq::Json grid{{"start", 0.0}, {"stop", 0.0}, {"steps", 0}};
      try {
        grid["start"] = std::stod(parts[0]);
        grid["stop"] = std::stod(parts[1]);
        grid["steps"] = std::stoll(parts[2]);
      } catch (const std::exception&) {
        throw cq::ValidationError("--grid", "expected numeric start:stop:steps");
      }
      if (parts.size() == 4) grid["scale"] = parts[3];
      cq::Json wrapper{{"param", cq::sweep_param_name(sweep->param)},
                       {"grid", grid}};
      sweep->grid = cq::parse_sweep_config(wrapper).second.grid;
    }
  }

  cfg.validate();
  return cfg;
}

int do_bell(const BellCli& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const cq::BellConfig cfg = build_bell_config(f, nullptr);
  const cq::ChshResult result = cq::chsh(cfg);
  const cq::Json record = cq::bell_record(cfg, result, ms_since(t0));
  std::cout << record.dump(2) << "\n";
  if (!f.csv_path.empty()) write_file(f.csv_path, cq::bell_csv(cfg, result));
  return 0;
}

int do_sweep(const BellCli& f) {
  const auto t0 = std::chrono::steady_clock::now();
  cq::SweepSpec spec;
  const cq::BellConfig cfg = build_bell_config(f, &spec);
  const std::vector<cq::SweepRow> rows = cq::sweep(cfg, spec.param, spec.grid);
  const std::string csv = cq::sweep_csv(spec.param, rows);
  if (f.json_out) {
    std::cout << cq::sweep_record(cfg, spec.param, rows, ms_since(t0)).dump(2)
              << "\n";
  } else {
    std::cout << csv;
  }
  if (!f.csv_path.empty()) write_file(f.csv_path, csv);
  return 0;
}

int do_validate(const std::string& path) {
  const cq::RunSpec spec = cq::load_scenario(path);
  std::cout << "ok: " << spec.scenario.dims.site_count() << " site(s), "
            << spec.scenario.events.size() << " event(s), "
            << spec.scenario.initial.size() << " initial component(s), engine "
            << cq::to_string(spec.engine) << ", mode "
            << (spec.exact ? "exact" : "sample") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal vs standard quantum state reduction simulator"};
  app.require_subcommand(1);

  RunCli run_cli;
  CLI::App* run_cmd = app.add_subcommand("run", "evaluate one scenario file");
  run_cmd->add_option("scenario", run_cli.scenario_path, "scenario JSON file")
      ->required();
  run_cli.engine_opt = run_cmd->add_option("--engine", run_cli.engine_str,
                                           "override engine: causal or standard");
  run_cli.seed_opt = run_cmd->add_option("--seed", run_cli.seed,
                                         "override random seed");
  run_cli.trials_opt = run_cmd->add_option(
      "--trials", run_cli.trials, "switch to sampling with this many trials");
  run_cmd->add_flag("--exact", run_cli.force_exact, "force exact enumeration");
  run_cmd->add_option("--threads", run_cli.threads,
                      "worker threads for sampling (0 = all cores)");
  run_cmd->add_option("--csv", run_cli.csv_path,
                      "also write the distribution to this CSV file");

  BellCli bell_cli;
  CLI::App* bell_cmd = app.add_subcommand("bell", "one CHSH evaluation");
  add_bell_flags(bell_cmd, bell_cli);

  BellCli sweep_cli;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "CHSH across a parameter grid");
  add_bell_flags(sweep_cmd, sweep_cli);
  sweep_cli.param_opt = sweep_cmd->add_option(
      "--param", sweep_cli.param_str, "swept parameter: separation|L|rate|lambda");
  sweep_cli.grid_opt = sweep_cmd->add_option(
      "--grid", sweep_cli.grid_str, "grid start:stop:steps[:scale], scale lin|log");
  sweep_cmd->add_flag("--json", sweep_cli.json_out,
                      "print a JSON record instead of CSV");

  std::string validate_path;
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check a scenario file and exit");
  validate_cmd->add_option("scenario", validate_path, "scenario JSON file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return do_run(run_cli);
    if (*bell_cmd) return do_bell(bell_cli);
    if (*sweep_cmd) return do_sweep(sweep_cli);
    return do_validate(validate_path);
  } catch (const cq::ZeroNormState& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const cq::BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const cq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
