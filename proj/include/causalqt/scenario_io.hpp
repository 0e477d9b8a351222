#pragma once

// Strict JSON schemas for scenario files, Bell/sweep configs, and result
// records.  Parsing is total: every malformed input maps to a
// ValidationError whose path names the offending field, and unknown keys
// are rejected.  Serialization keeps full double precision so records
// round-trip losslessly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "causalqt/bell.hpp"
#include "causalqt/collapse.hpp"
#include "causalqt/engine.hpp"
#include "causalqt/errors.hpp"
#include "causalqt/linalg.hpp"

namespace causalqt {

inline constexpr const char* kToolName = "causalqt";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::json;

inline std::string to_string(EngineKind kind) {
  return kind == EngineKind::Causal ? "causal" : "standard";
}

// Everything a `run` invocation needs, as read from one scenario file.
struct RunSpec {
  Scenario scenario;
  EngineKind engine = EngineKind::Causal;
  std::uint64_t seed = 0;
  bool exact = true;
  std::uint64_t trials = 0;
};

struct SweepSpec {
  SweepParam param = SweepParam::SeparationL;
  std::vector<double> grid;
};

namespace io_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path, msg);
}

inline const Json& object_at(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

inline void check_keys(const Json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  object_at(j, path);
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        ok = true;
        break;
      }
    if (!ok) fail(path.empty() ? item.key() : path + "." + item.key(),
                  "unknown key");
  }
}

inline const Json& member(const Json& j, const std::string& path,
                          const std::string& key) {
  object_at(j, path);
  if (!j.contains(key))
    fail(path.empty() ? key : path + "." + key, "missing required key");
  return j.at(key);
}

inline double number_at(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline std::int64_t integer_at(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t unsigned_at(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const std::int64_t v = j.get<std::int64_t>();
    if (v < 0) fail(path, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(v);
  }
  fail(path, "expected a nonnegative integer");
}

inline bool bool_at(const Json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

inline std::string string_at(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline const Json& array_at(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

inline Complex complex_at(const Json& j, const std::string& path) {
  array_at(j, path);
  if (j.size() != 2) fail(path, "expected a [re, im] pair");
  return Complex{number_at(j.at(0), path + "[0]"), number_at(j.at(1), path + "[1]")};
}

inline EngineKind engine_at(const Json& j, const std::string& path) {
  const std::string s = string_at(j, path);
  if (s == "causal") return EngineKind::Causal;
  if (s == "standard") return EngineKind::Standard;
  fail(path, "expected \"causal\" or \"standard\"");
}

// Re-addresses ParamError / DimensionError raised by a library constructor
// to the field being parsed.
template <typename Fn>
auto addressed(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

inline SiteDims parse_dims(const Json& j, const std::string& path) {
  array_at(j, path);
  if (j.empty()) fail(path, "needs at least one site");
  SiteDims dims;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const std::int64_t d = integer_at(j.at(i), p);
    if (d < 2) fail(p, "site dimension must be >= 2");
    dims.dims.push_back(static_cast<int>(d));
  }
  return addressed(path, [&] {
    dims.validate();
    return dims;
  });
}

inline std::vector<Vec3> parse_positions(const Json& j, const std::string& path,
                                         std::size_t n_sites) {
  array_at(j, path);
  if (j.size() != n_sites)
    fail(path, "expected one position per site (" + std::to_string(n_sites) + ")");
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const Json& pos = array_at(j.at(i), p);
    Vec3 v;
    if (pos.size() == 1) {
      v.x = number_at(pos.at(0), p + "[0]");
    } else if (pos.size() == 3) {
      v.x = number_at(pos.at(0), p + "[0]");
      v.y = number_at(pos.at(1), p + "[1]");
      v.z = number_at(pos.at(2), p + "[2]");
    } else {
      fail(p, "expected [x] or [x, y, z]");
    }
    out.push_back(v);
  }
  return out;
}

inline PureState parse_pure_state(const Json& j, const std::string& path,
                                  const SiteDims& dims) {
  check_keys(j, path, {"perturbed_singlet", "amplitudes"});
  if (j.size() != 1) fail(path, "expected exactly one of perturbed_singlet, amplitudes");
  if (j.contains("perturbed_singlet")) {
    const std::string p = path + ".perturbed_singlet";
    const Json& ps = member(j, path, "perturbed_singlet");
    check_keys(ps, p, {"eps"});
    const double eps = number_at(member(ps, p, "eps"), p + ".eps");
    if (!(dims == SiteDims{{2, 2}}))
      fail(p, "perturbed_singlet needs dims [2, 2]");
    return addressed(p + ".eps", [&] { return perturbed_singlet(eps); });
  }
  const std::string p = path + ".amplitudes";
  const Json& arr = array_at(member(j, path, "amplitudes"), p);
  if (static_cast<std::int64_t>(arr.size()) != dims.total_dim())
    fail(p, "expected " + std::to_string(dims.total_dim()) + " amplitudes");
  CVector amp;
  amp.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    amp.push_back(complex_at(arr.at(i), p + "[" + std::to_string(i) + "]"));
  return addressed(p, [&] { return PureState::make(dims, std::move(amp)); });
}

inline std::vector<WeightedState> parse_initial(const Json& j,
                                                const std::string& path,
                                                const SiteDims& dims) {
  object_at(j, path);
  if (j.contains("mixture")) {
    check_keys(j, path, {"mixture"});
    const std::string p = path + ".mixture";
    const Json& arr = array_at(member(j, path, "mixture"), p);
    if (arr.empty()) fail(p, "mixture needs at least one component");
    std::vector<WeightedState> out;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string cp = p + "[" + std::to_string(i) + "]";
      check_keys(arr.at(i), cp, {"weight", "state"});
      const double w = number_at(member(arr.at(i), cp, "weight"), cp + ".weight");
      if (!(w >= 0.0)) fail(cp + ".weight", "weight must be >= 0");
      weight_sum += w;
      out.push_back(WeightedState{
          w, parse_pure_state(member(arr.at(i), cp, "state"), cp + ".state", dims)});
    }
    if (std::abs(weight_sum - 1.0) > kNormTol)
      fail(p, "mixture weights must sum to 1");
    return out;
  }
  return {WeightedState{1.0, parse_pure_state(j, path, dims)}};
}

inline KrausSet parse_kraus(const Json& j, const std::string& path, int site_dim) {
  check_keys(j, path, {"projective", "softened", "matrices"});
  if (j.size() != 1)
    fail(path, "expected exactly one of projective, softened, matrices");
  if (j.contains("projective")) {
    const std::string p = path + ".projective";
    const Json& pj = member(j, path, "projective");
    check_keys(pj, p, {"theta"});
    if (site_dim != 2) fail(p, "projective reductions need a 2-dimensional site");
    const double theta = number_at(member(pj, p, "theta"), p + ".theta");
    return addressed(p, [&] { return projective_qubit(theta); });
  }
  if (j.contains("softened")) {
    const std::string p = path + ".softened";
    const Json& sj = member(j, path, "softened");
    check_keys(sj, p, {"theta", "eta"});
    if (site_dim != 2) fail(p, "softened reductions need a 2-dimensional site");
    const double theta = number_at(member(sj, p, "theta"), p + ".theta");
    const double eta = number_at(member(sj, p, "eta"), p + ".eta");
    return addressed(p, [&] { return softened_projectors(theta, eta); });
  }
  const std::string p = path + ".matrices";
  const Json& arr = array_at(member(j, path, "matrices"), p);
  if (arr.empty()) fail(p, "needs at least one matrix");
  std::vector<CVector> ops;
  for (std::size_t m = 0; m < arr.size(); ++m) {
    const std::string mp = p + "[" + std::to_string(m) + "]";
    const Json& rows = array_at(arr.at(m), mp);
    if (static_cast<int>(rows.size()) != site_dim)
      fail(mp, "expected " + std::to_string(site_dim) + " rows");
    CVector op;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string rp = mp + "[" + std::to_string(r) + "]";
      const Json& row = array_at(rows.at(r), rp);
      if (static_cast<int>(row.size()) != site_dim)
        fail(rp, "expected " + std::to_string(site_dim) + " entries");
      for (std::size_t c = 0; c < row.size(); ++c)
        op.push_back(complex_at(row.at(c), rp + "[" + std::to_string(c) + "]"));
    }
    ops.push_back(std::move(op));
  }
  return addressed(p, [&] { return KrausSet::validated(site_dim, std::move(ops)); });
}

}  // namespace io_detail

inline RunSpec parse_scenario(const Json& j, const std::string& root = "") {
  using namespace io_detail;
  check_keys(j, root, {"dims", "site_positions", "initial", "events", "engine",
                       "seed", "mode"});
  auto path = [&](const char* key) {
    return root.empty() ? std::string(key) : root + "." + key;
  };

  RunSpec spec;
  spec.scenario.dims = parse_dims(member(j, root, "dims"), path("dims"));
  spec.scenario.site_positions =
      parse_positions(member(j, root, "site_positions"), path("site_positions"),
                      spec.scenario.dims.dims.size());
  spec.scenario.initial = parse_initial(member(j, root, "initial"),
                                        path("initial"), spec.scenario.dims);

  const Json& events = array_at(member(j, root, "events"), path("events"));
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string ep = path("events") + "[" + std::to_string(i) + "]";
    const Json& ej = events.at(i);
    check_keys(ej, ep, {"site", "t", "kraus", "x", "y", "z"});
    const std::int64_t site = integer_at(member(ej, ep, "site"), ep + ".site");
    if (site < 0 || site >= spec.scenario.dims.site_count())
      fail(ep + ".site", "site index out of range");
    ReductionEvent ev;
    ev.id = static_cast<int>(i);
    ev.site = static_cast<int>(site);
    ev.point.t = number_at(member(ej, ep, "t"), ep + ".t");
    const Vec3& home = spec.scenario.site_positions[static_cast<std::size_t>(site)];
    ev.point.pos = home;  // events default to their site's position
    if (ej.contains("x")) ev.point.pos.x = number_at(ej.at("x"), ep + ".x");
    if (ej.contains("y")) ev.point.pos.y = number_at(ej.at("y"), ep + ".y");
    if (ej.contains("z")) ev.point.pos.z = number_at(ej.at("z"), ep + ".z");
    ev.kraus = parse_kraus(member(ej, ep, "kraus"), ep + ".kraus",
                           spec.scenario.dims.dims[static_cast<std::size_t>(site)]);
    spec.scenario.events.push_back(std::move(ev));
  }

  spec.engine = engine_at(member(j, root, "engine"), path("engine"));
  spec.seed = unsigned_at(member(j, root, "seed"), path("seed"));

  const Json& mode = member(j, root, "mode");
  check_keys(mode, path("mode"), {"exact", "sample"});
  if (mode.size() != 1) fail(path("mode"), "expected exactly one of exact, sample");
  if (mode.contains("exact")) {
    check_keys(mode.at("exact"), path("mode") + ".exact", {});
    spec.exact = true;
  } else {
    const std::string sp = path("mode") + ".sample";
    check_keys(mode.at("sample"), sp, {"trials"});
    spec.exact = false;
    spec.trials = unsigned_at(member(mode.at("sample"), sp, "trials"),
                              sp + ".trials");
    if (spec.trials == 0) fail(sp + ".trials", "trials must be > 0");
  }

  addressed(root, [&] {
    spec.scenario.validate();
    return 0;
  });
  return spec;
}

inline Json load_json_file(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ValidationError(file_path, "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(file_path, e.what());
  }
}

inline RunSpec load_scenario(const std::string& file_path) {
  return parse_scenario(load_json_file(file_path));
}

// ── Bell / sweep configs ──────────────────────────────────────────────────

namespace io_detail {

inline void parse_delay_pair(const Json& j, const std::string& path,
                             BellConfig& cfg) {
  check_keys(j, path, {"family", "delta0", "rate"});
  const std::string family = string_at(member(j, path, "family"), path + ".family");
  DelayFamily fam;
  if (family == "deterministic") {
    fam = DelayFamily::Deterministic;
  } else if (family == "exponential") {
    fam = DelayFamily::Exponential;
  } else {
    fail(path + ".family", "expected \"deterministic\" or \"exponential\"");
  }
  cfg.delay_a.family = cfg.delay_b.family = fam;
  const char* value_key = fam == DelayFamily::Deterministic ? "delta0" : "rate";
  const char* other_key = fam == DelayFamily::Deterministic ? "rate" : "delta0";
  if (j.contains(other_key))
    fail(path + "." + other_key, std::string("not valid for family ") + family);
  const Json& v = member(j, path, value_key);
  const std::string vp = path + "." + value_key;
  double a, b;
  if (v.is_array()) {
    if (v.size() != 2) fail(vp, "expected a number or a [wing_a, wing_b] pair");
    a = number_at(v.at(0), vp + "[0]");
    b = number_at(v.at(1), vp + "[1]");
  } else {
    a = b = number_at(v, vp);
  }
  if (fam == DelayFamily::Deterministic) {
    cfg.delay_a.delta0 = a;
    cfg.delay_b.delta0 = b;
  } else {
    cfg.delay_a.rate = a;
    cfg.delay_b.rate = b;
  }
  addressed(vp, [&] {
    cfg.delay_a.validate();
    cfg.delay_b.validate();
    return 0;
  });
}

}  // namespace io_detail

inline BellConfig parse_bell_config(const Json& j, const std::string& root = "",
                                    bool allow_sweep_keys = false) {
  using namespace io_detail;
  if (allow_sweep_keys) {
    check_keys(j, root, {"engine", "exact", "trials", "separation", "eps", "eta",
                         "angles", "arrival_time", "delay", "seed", "param",
                         "grid"});
  } else {
    check_keys(j, root, {"engine", "exact", "trials", "separation", "eps", "eta",
                         "angles", "arrival_time", "delay", "seed"});
  }
  auto path = [&](const char* key) {
    return root.empty() ? std::string(key) : root + "." + key;
  };
  BellConfig cfg;
  if (j.contains("engine")) cfg.engine = engine_at(j.at("engine"), path("engine"));
  if (j.contains("exact")) cfg.exact = bool_at(j.at("exact"), path("exact"));
  if (j.contains("trials"))
    cfg.trials = unsigned_at(j.at("trials"), path("trials"));
  if (j.contains("separation"))
    cfg.separation = number_at(j.at("separation"), path("separation"));
  if (j.contains("eps")) cfg.eps = number_at(j.at("eps"), path("eps"));
  if (j.contains("eta")) cfg.eta = number_at(j.at("eta"), path("eta"));
  if (j.contains("arrival_time"))
    cfg.arrival_time = number_at(j.at("arrival_time"), path("arrival_time"));
  if (j.contains("angles")) {
    const std::string p = path("angles");
    const Json& arr = array_at(j.at("angles"), p);
    if (arr.size() != 4) fail(p, "expected [a, a', b, b']");
    cfg.angle_a = number_at(arr.at(0), p + "[0]");
    cfg.angle_ap = number_at(arr.at(1), p + "[1]");
    cfg.angle_b = number_at(arr.at(2), p + "[2]");
    cfg.angle_bp = number_at(arr.at(3), p + "[3]");
  }
  if (j.contains("delay"))
    io_detail::parse_delay_pair(j.at("delay"), path("delay"), cfg);
  if (j.contains("seed")) cfg.seed = unsigned_at(j.at("seed"), path("seed"));
  addressed(root, [&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

inline std::pair<BellConfig, SweepSpec> parse_sweep_config(
    const Json& j, const std::string& root = "") {
  using namespace io_detail;
  BellConfig cfg = parse_bell_config(j, root, /*allow_sweep_keys=*/true);
  auto path = [&](const char* key) {
    return root.empty() ? std::string(key) : root + "." + key;
  };
  SweepSpec spec;
  const std::string param = string_at(member(j, root, "param"), path("param"));
  if (param == "separation") {
    spec.param = SweepParam::SeparationL;
  } else if (param == "rate") {
    spec.param = SweepParam::DelayRate;
  } else {
    fail(path("param"), "expected \"separation\" or \"rate\"");
  }
  const std::string gp = path("grid");
  const Json& grid = member(j, root, "grid");
  check_keys(grid, gp, {"start", "stop", "steps", "scale"});
  const double start = number_at(member(grid, gp, "start"), gp + ".start");
  const double stop = number_at(member(grid, gp, "stop"), gp + ".stop");
  const std::int64_t steps = integer_at(member(grid, gp, "steps"), gp + ".steps");
  std::string scale = "lin";
  if (grid.contains("scale")) scale = string_at(grid.at("scale"), gp + ".scale");
  if (scale != "lin" && scale != "log")
    fail(gp + ".scale", "expected \"lin\" or \"log\"");
  if (steps < 1) fail(gp + ".steps", "steps must be >= 1");
  if (!(start > 0.0) || !(stop > 0.0))
    fail(gp, "grid endpoints must be > 0");
  if (steps == 1) {
    spec.grid = {start};
  } else if (scale == "lin") {
    for (std::int64_t k = 0; k < steps; ++k)
      spec.grid.push_back(start + (stop - start) * static_cast<double>(k) /
                                      static_cast<double>(steps - 1));
  } else {
    const double ls = std::log(start);
    const double le = std::log(stop);
    for (std::int64_t k = 0; k < steps; ++k)
      spec.grid.push_back(std::exp(ls + (le - ls) * static_cast<double>(k) /
                                            static_cast<double>(steps - 1)));
  }
  return {std::move(cfg), std::move(spec)};
}

// ── Result records ────────────────────────────────────────────────────────

// Full printed precision for CSV; JSON uses the serializer's shortest
// round-trip form.  Both parse back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline Json distribution_json(const OutcomeDistribution& dist) {
  Json entries = Json::array();
  for (std::size_t idx = 0; idx < dist.probabilities.size(); ++idx)
    entries.push_back(Json{{"outcomes", dist.tuple_of(idx)},
                           {"probability", dist.probabilities[idx]}});
  Json truncations = Json::array();
  for (const auto& tr : dist.truncations) {
    Json chain = Json::array();
    for (const auto& [event, outcome] : tr.chain)
      chain.push_back(Json{{"event", event}, {"outcome", outcome}});
    truncations.push_back(Json{{"weight", tr.weight}, {"chain", chain}});
  }
  return Json{{"event_ids", dist.event_ids},
              {"outcome_counts", dist.radices},
              {"distribution", entries},
              {"truncated_mass", dist.truncated_mass},
              {"truncations", truncations}};
}

inline Json counts_json(const SampleCounts& counts) {
  Json entries = Json::array();
  for (const auto& [tuple, count] : counts.counts)
    entries.push_back(Json{{"outcomes", tuple}, {"count", count}});
  return Json{{"event_ids", counts.event_ids},
              {"outcome_counts", counts.radices},
              {"counts", entries},
              {"trials", counts.trials}};
}

inline Json run_record(const RunSpec& spec, const std::string& source,
                       const Json& payload, double timing_ms) {
  Json record = payload;
  record["tool"] = kToolName;
  record["version"] = kToolVersion;
  record["command"] = "run";
  record["scenario"] = source;
  record["engine"] = to_string(spec.engine);
  record["mode"] = spec.exact ? "exact" : "sample";
  record["seed"] = spec.seed;
  record["timing_ms"] = timing_ms;
  return record;
}

inline std::string run_csv(const OutcomeDistribution& dist) {
  std::string out;
  for (std::size_t k = 0; k < dist.radices.size(); ++k)
    out += "outcome_" + std::to_string(k) + ",";
  out += "probability\n";
  for (std::size_t idx = 0; idx < dist.probabilities.size(); ++idx) {
    for (int o : dist.tuple_of(idx)) out += std::to_string(o) + ",";
    out += format_double(dist.probabilities[idx]) + "\n";
  }
  return out;
}

inline std::string run_csv(const SampleCounts& counts) {
  std::string out;
  for (std::size_t k = 0; k < counts.radices.size(); ++k)
    out += "outcome_" + std::to_string(k) + ",";
  out += "count\n";
  for (const auto& [tuple, count] : counts.counts) {
    for (int o : tuple) out += std::to_string(o) + ",";
    out += std::to_string(count) + "\n";
  }
  return out;
}

inline Json estimate_json(const Estimate& e) {
  return Json{{"value", e.value}, {"std_error", e.std_error}};
}

inline Json delay_json(const DelayModel& model) {
  if (model.family == DelayFamily::Deterministic)
    return Json{{"family", "deterministic"}, {"delta0", model.delta0}};
  return Json{{"family", "exponential"}, {"rate", model.rate}};
}

inline Json bell_config_json(const BellConfig& cfg) {
  return Json{{"engine", to_string(cfg.engine)},
              {"exact", cfg.exact},
              {"trials", cfg.trials},
              {"separation", cfg.separation},
              {"eps", cfg.eps},
              {"eta", cfg.eta},
              {"arrival_time", cfg.arrival_time},
              {"angles", {cfg.angle_a, cfg.angle_ap, cfg.angle_b, cfg.angle_bp}},
              {"delay_a", delay_json(cfg.delay_a)},
              {"delay_b", delay_json(cfg.delay_b)}};
}

inline Json bell_record(const BellConfig& cfg, const ChshResult& r,
                        double timing_ms) {
  return Json{{"tool", kToolName},
              {"version", kToolVersion},
              {"command", "bell"},
              {"config", bell_config_json(cfg)},
              {"seed", cfg.seed},
              {"E_ab", estimate_json(r.e_ab)},
              {"E_abp", estimate_json(r.e_abp)},
              {"E_apb", estimate_json(r.e_apb)},
              {"E_apbp", estimate_json(r.e_apbp)},
              {"S", estimate_json(r.s)},
              {"p_spacelike", estimate_json(r.p_spacelike)},
              {"timing_ms", timing_ms}};
}

inline constexpr const char* kBellCsvHeader =
    "engine,exact,trials,separation,eps,eta,angle_a,angle_ap,angle_b,angle_bp,"
    "E_ab,se_E_ab,E_abp,se_E_abp,E_apb,se_E_apb,E_apbp,se_E_apbp,S,se_S,"
    "p_spacelike,se_p_spacelike";

inline std::string bell_csv(const BellConfig& cfg, const ChshResult& r) {
  std::string out = kBellCsvHeader;
  out += "\n";
  out += to_string(cfg.engine) + ",";
  out += std::string(cfg.exact ? "true" : "false") + ",";
  out += std::to_string(cfg.trials) + ",";
  for (double v : {cfg.separation, cfg.eps, cfg.eta, cfg.angle_a, cfg.angle_ap,
                   cfg.angle_b, cfg.angle_bp})
    out += format_double(v) + ",";
  for (const Estimate* e : {&r.e_ab, &r.e_abp, &r.e_apb, &r.e_apbp, &r.s,
                            &r.p_spacelike}) {
    out += format_double(e->value) + "," + format_double(e->std_error);
    out += e == &r.p_spacelike ? "\n" : ",";
  }
  return out;
}

inline constexpr const char* kSweepCsvHeader =
    "param,value,p_spacelike,se_p_spacelike,S_direct,se_S_direct,"
    "S_mixture_prediction,E_ab,se_E_ab,E_abp,se_E_abp,E_apb,se_E_apb,"
    "E_apbp,se_E_apbp";

inline std::string sweep_param_name(SweepParam param) {
  return param == SweepParam::SeparationL ? "separation" : "rate";
}

inline std::string sweep_csv(SweepParam param, const std::vector<SweepRow>& rows) {
  std::string out = kSweepCsvHeader;
  out += "\n";
  for (const auto& row : rows) {
    out += sweep_param_name(param) + ",";
    out += format_double(row.value) + ",";
    out += format_double(row.chsh.p_spacelike.value) + ",";
    out += format_double(row.chsh.p_spacelike.std_error) + ",";
    out += format_double(row.chsh.s.value) + ",";
    out += format_double(row.chsh.s.std_error) + ",";
    out += format_double(row.s_mixture) + ",";
    for (const Estimate* e :
         {&row.chsh.e_ab, &row.chsh.e_abp, &row.chsh.e_apb, &row.chsh.e_apbp}) {
      out += format_double(e->value) + "," + format_double(e->std_error);
      out += e == &row.chsh.e_apbp ? "\n" : ",";
    }
  }
  return out;
}

inline Json sweep_record(const BellConfig& cfg, SweepParam param,
                         const std::vector<SweepRow>& rows, double timing_ms) {
  Json jrows = Json::array();
  for (const auto& row : rows)
    jrows.push_back(Json{{"value", row.value},
                         {"p_spacelike", estimate_json(row.chsh.p_spacelike)},
                         {"S_direct", estimate_json(row.chsh.s)},
                         {"S_mixture_prediction", row.s_mixture},
                         {"E_ab", estimate_json(row.chsh.e_ab)},
                         {"E_abp", estimate_json(row.chsh.e_abp)},
                         {"E_apb", estimate_json(row.chsh.e_apb)},
                         {"E_apbp", estimate_json(row.chsh.e_apbp)}});
  return Json{{"tool", kToolName},
              {"version", kToolVersion},
              {"command", "sweep"},
              {"config", bell_config_json(cfg)},
              {"param", sweep_param_name(param)},
              {"seed", cfg.seed},
              {"rows", jrows},
              {"timing_ms", timing_ms}};
}

}  // namespace causalqt
