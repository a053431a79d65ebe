#include "edgewbc/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace edgewbc {

using nlohmann::json;

const char* to_string(EpisodeKind k) {
  return k == EpisodeKind::Balance ? "balancing" : "walking";
}

const char* to_string(ControlScheme s) {
  return s == ControlScheme::LocallyAssisted ? "la" : "pr";
}

EpisodeKind parse_episode_kind(const std::string& s) {
  if (s == "balancing" || s == "balance") return EpisodeKind::Balance;
  if (s == "walking" || s == "walk") return EpisodeKind::Walk;
  throw ConfigError("task: expected 'balancing' or 'walking', got '" + s + "'");
}

ControlScheme parse_control_scheme(const std::string& s) {
  if (s == "la" || s == "locally-assisted") return ControlScheme::LocallyAssisted;
  if (s == "pr" || s == "purely-remote") return ControlScheme::PurelyRemote;
  throw ConfigError("controller: expected 'la' or 'pr', got '" + s + "'");
}

ChannelConfig parse_channel_spec(const std::string& spec) {
  if (spec.rfind("constant:", 0) == 0) {
    const std::string num = spec.substr(9);
    char* end = nullptr;
    const double rtt = std::strtod(num.c_str(), &end);
    if (end == num.c_str() || *end != '\0' || rtt < 0.0)
      throw ConfigError("channel: bad constant delay '" + num + "'");
    return ChannelConfig::constant(rtt);
  }
  if (spec.rfind("trace:", 0) == 0) {
    ChannelConfig cfg;
    cfg.kind = ChannelConfig::Kind::Trace;
    cfg.trace_path = spec.substr(6);
    if (cfg.trace_path.empty()) throw ConfigError("channel: trace path is empty");
    return cfg;
  }
  return ChannelConfig::preset(spec);  // throws ConfigError on unknown names
}

namespace {

// Typed view of a JSON object that tracks the field path for error messages
// and rejects unknown keys.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  double num(const char* key, double fallback) {
    if (!mark(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  int integer(const char* key, int fallback) {
    if (!mark(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(path_ + "." + key + ": expected an integer");
    return v.get<int>();
  }

  std::uint64_t uinteger(const char* key, std::uint64_t fallback) {
    if (!mark(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
      throw ConfigError(path_ + "." + key + ": expected a non-negative integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0)
      throw ConfigError(path_ + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key, bool fallback) {
    if (!mark(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected a boolean");
    return v.get<bool>();
  }

  std::string str(const char* key, const std::string& fallback) {
    if (!mark(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<std::string> str_list(const char* key,
                                    const std::vector<std::string>& fallback) {
    if (!mark(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array())
      throw ConfigError(path_ + "." + key + ": expected an array of strings");
    std::vector<std::string> out;
    for (const json& e : v) {
      if (!e.is_string())
        throw ConfigError(path_ + "." + key + ": expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  const json* child(const char* key) {
    if (!mark(key)) return nullptr;
    return &j_.at(key);
  }

  std::string child_path(const char* key) const { return path_ + "." + key; }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(path_ + "." + it.key() + ": unknown field");
  }

 private:
  bool mark(const char* key) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    return true;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ChannelConfig channel_from_json(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return parse_channel_spec(j.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  Obj o(j, path);
  const std::string kind = o.str("kind", "");
  ChannelConfig cfg;
  if (kind == "constant") {
    cfg = ChannelConfig::constant(o.num("rtt", 0.0));
    if (cfg.constant_rtt < 0.0) throw ConfigError(path + ".rtt: must be >= 0");
  } else if (kind == "trace") {
    cfg.kind = ChannelConfig::Kind::Trace;
    cfg.trace_path = o.str("path", "");
    if (cfg.trace_path.empty()) throw ConfigError(path + ".path: required for traces");
  } else if (kind == "blockage") {
    const std::string preset = o.str("preset", "smart_factory");
    try {
      cfg = ChannelConfig::preset(preset);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ".preset: " + e.what());
    }
    BlockageParams& b = cfg.blockage;
    b.outage_rate = o.num("outage_rate", b.outage_rate);
    b.mean_outage_duration = o.num("mean_outage_duration", b.mean_outage_duration);
    b.duration_sigma_ln = o.num("duration_sigma_ln", b.duration_sigma_ln);
    b.min_outage_duration = o.num("min_outage_duration", b.min_outage_duration);
    b.max_outage_duration = o.num("max_outage_duration", b.max_outage_duration);
    b.extra_delay_cap = o.num("extra_delay_cap", b.extra_delay_cap);
    b.extra_delay_sigma_ln = o.num("extra_delay_sigma_ln", b.extra_delay_sigma_ln);
    b.drop_prob_in_outage = o.num("drop_prob_in_outage", b.drop_prob_in_outage);
    b.airlink_min = o.num("airlink_min", b.airlink_min);
    b.airlink_max = o.num("airlink_max", b.airlink_max);
    b.edge_delay = o.num("edge_delay", b.edge_delay);
  } else {
    throw ConfigError(path + ".kind: expected 'constant', 'blockage' or 'trace'");
  }
  o.done();
  return cfg;
}

EpisodeConfig episode_from_json(const json& j, const std::string& path,
                                RobotModel* model_out, bool expect_schema) {
  Obj o(j, path);

  if (expect_schema) {
    const std::string schema = o.str("schema", "");
    if (schema != "edgewbc-config/1")
      throw ConfigError(path + ".schema: expected 'edgewbc-config/1'");
  }

  EpisodeKind kind = EpisodeKind::Balance;
  if (o.has("task")) {
    try {
      kind = parse_episode_kind(o.str("task", ""));
    } catch (const ConfigError& e) {
      throw ConfigError(path + "." + e.what());
    }
  }
  EpisodeConfig cfg =
      kind == EpisodeKind::Balance ? balance_episode_defaults() : walk_episode_defaults();

  if (o.has("controller")) {
    try {
      cfg.scheme = parse_control_scheme(o.str("controller", ""));
    } catch (const ConfigError& e) {
      throw ConfigError(path + "." + e.what());
    }
  }
  if (const json* c = o.child("channel"))
    cfg.channel = channel_from_json(*c, o.child_path("channel"));

  cfg.duration = o.num("duration", cfg.duration);
  if (cfg.duration <= 0.0) throw ConfigError(path + ".duration: must be > 0");
  cfg.noise_sigma = o.num("noise_sigma", cfg.noise_sigma);
  if (cfg.noise_sigma < 0.0) throw ConfigError(path + ".noise_sigma: must be >= 0");
  cfg.seed = o.uinteger("seed", cfg.seed);
  cfg.stance_width = o.num("stance_width", cfg.stance_width);
  cfg.left_foot = o.str("left_foot", cfg.left_foot);
  cfg.right_foot = o.str("right_foot", cfg.right_foot);
  cfg.left_stance = o.str_list("left_stance", cfg.left_stance);
  cfg.right_stance = o.str_list("right_stance", cfg.right_stance);
  cfg.log_cycles = o.boolean("log_cycles", cfg.log_cycles);
  cfg.log_discrepancy = o.boolean("log_discrepancy", cfg.log_discrepancy);

  if (const json* p = o.child("push")) {
    Obj po(*p, o.child_path("push"));
    cfg.push.enabled = po.boolean("enabled", true);
    cfg.push.weight_fraction = po.num("weight_fraction", cfg.push.weight_fraction);
    cfg.push.force = po.num("force", cfg.push.force);
    cfg.push.start = po.num("start", cfg.push.start);
    cfg.push.duration = po.num("duration", cfg.push.duration);
    if (cfg.push.duration <= 0.0)
      throw ConfigError(o.child_path("push") + ".duration: must be > 0");
    po.done();
  }

  if (const json* s = o.child("scheduler")) {
    Obj so(*s, o.child_path("scheduler"));
    SchedulerConfig& sc = cfg.scheduler;
    sc.ctrl_period = so.num("ctrl_period", sc.ctrl_period);
    sc.freshness_bound = so.num("freshness_bound", sc.freshness_bound);
    sc.switch_margin = so.num("switch_margin", sc.switch_margin);
    sc.onboard_period = so.num("onboard_period", sc.onboard_period);
    sc.precompute_lead = so.num("precompute_lead", sc.precompute_lead);
    sc.onboard_slowdown = so.num("onboard_slowdown", sc.onboard_slowdown);
    sc.remote_solve_time = so.num("remote_solve_time", sc.remote_solve_time);
    if (sc.ctrl_period <= 0.0)
      throw ConfigError(o.child_path("scheduler") + ".ctrl_period: must be > 0");
    so.done();
  }

  if (const json* w = o.child("walk")) {
    Obj wo(*w, o.child_path("walk"));
    WalkParams& wp = cfg.walk;
    wp.step_length = wo.num("step_length", wp.step_length);
    wp.step_duration = wo.num("step_duration", wp.step_duration);
    wp.double_support = wo.num("double_support", wp.double_support);
    wp.com_height = wo.num("com_height", wp.com_height);
    wp.swing_height = wo.num("swing_height", wp.swing_height);
    wp.stand_time = wo.num("stand_time", wp.stand_time);
    wp.stance_width = wo.num("stance_width", wp.stance_width);
    wp.max_step_span = wo.num("max_step_span", wp.max_step_span);
    wp.steps = wo.integer("steps", wp.steps);
    wo.done();
  }

  if (const json* w = o.child("weights")) {
    Obj wo(*w, o.child_path("weights"));
    TsidWeights& tw = cfg.weights;
    tw.com_weight = wo.num("com_weight", tw.com_weight);
    tw.com_kp = wo.num("com_kp", tw.com_kp);
    tw.posture_weight = wo.num("posture_weight", tw.posture_weight);
    tw.posture_kp = wo.num("posture_kp", tw.posture_kp);
    tw.swing_weight = wo.num("swing_weight", tw.swing_weight);
    tw.swing_kp = wo.num("swing_kp", tw.swing_kp);
    tw.qp.force_reg_weight = wo.num("force_reg", tw.qp.force_reg_weight);
    wo.done();
  }

  if (const json* s = o.child("solver")) {
    Obj so(*s, o.child_path("solver"));
    cfg.solver.max_iter_factor = so.integer("max_iter_factor", cfg.solver.max_iter_factor);
    cfg.solver.feas_tol = so.num("feas_tol", cfg.solver.feas_tol);
    cfg.solver.mult_tol = so.num("mult_tol", cfg.solver.mult_tol);
    cfg.solver.rank_tol = so.num("rank_tol", cfg.solver.rank_tol);
    so.done();
  }

  const std::string model_path = o.str("model", "");
  if (model_out) {
    *model_out = model_path.empty() ? default_biped_model() : load_model(model_path);
  } else if (!model_path.empty()) {
    throw ConfigError(path + ".model: not accepted here");
  }

  o.done();
  return cfg;
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_env_seed(EpisodeConfig& cfg) {
  if (const char* env = std::getenv("EDGEWBC_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw ConfigError("EDGEWBC_SEED: expected an unsigned integer, got '" +
                        std::string(env) + "'");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
}

}  // namespace

EpisodeConfig episode_config_from_json_text(const std::string& text,
                                            RobotModel* model_out) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  EpisodeConfig cfg = episode_from_json(j, "$", model_out, /*expect_schema=*/true);
  apply_env_seed(cfg);
  return cfg;
}

LoadedConfig load_episode_config(const std::string& path) {
  const json j = parse_json_file(path);
  LoadedConfig out;
  out.episode = episode_from_json(j, "$", &out.model, /*expect_schema=*/true);
  apply_env_seed(out.episode);
  return out;
}

SweepGrid load_sweep_grid(const std::string& path) {
  const json j = parse_json_file(path);
  if (!j.is_object()) throw ConfigError("$: expected an object");
  if (j.value("schema", "") != "edgewbc-config/1")
    throw ConfigError("$.schema: expected 'edgewbc-config/1'");
  if (!j.contains("base") || !j["base"].is_object())
    throw ConfigError("$.base: required object");
  if (!j.contains("grid") || !j["grid"].is_array() || j["grid"].empty())
    throw ConfigError("$.grid: required non-empty array");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "schema" && it.key() != "model" && it.key() != "base" &&
        it.key() != "grid")
      throw ConfigError("$." + it.key() + ": unknown field");

  SweepGrid grid;
  const std::string model_path = j.value("model", "");
  grid.model = model_path.empty() ? default_biped_model() : load_model(model_path);

  EpisodeConfig base =
      episode_from_json(j["base"], "$.base", nullptr, /*expect_schema=*/false);
  apply_env_seed(base);
  json base_json = j["base"];
  if (const char* env = std::getenv("EDGEWBC_SEED")) base_json["seed"] = base.seed;

  int idx = 0;
  for (const json& item : j["grid"]) {
    const std::string ipath = "$.grid[" + std::to_string(idx) + "]";
    if (!item.is_object()) throw ConfigError(ipath + ": expected an object");
    json merged = base_json;
    json overrides = item;
    std::string label = "row" + std::to_string(idx);
    if (overrides.contains("label")) {
      if (!overrides["label"].is_string())
        throw ConfigError(ipath + ".label: expected a string");
      label = overrides["label"].get<std::string>();
      overrides.erase("label");
    }
    merged.merge_patch(overrides);
    grid.items.push_back(
        {label, episode_from_json(merged, ipath, nullptr, /*expect_schema=*/false)});
    ++idx;
  }
  return grid;
}

}  // namespace edgewbc
