#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/harness.hpp"
#include "ais/text_util.hpp"

namespace ais {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::NsOnly: return "NS_ONLY";
    case Mode::Danger: return "DANGER";
    case Mode::Hybrid: return "HYBRID";
  }
  return "?";
}

std::string_view to_string(OracleKind oracle) {
  switch (oracle) {
    case OracleKind::AlwaysYes: return "always_yes";
    case OracleKind::AlwaysNo: return "always_no";
    case OracleKind::GroundTruth: return "ground_truth";
  }
  return "?";
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError(fmt::format("config: bad value '{}' for key '{}'", value, key));
}

double as_double(std::string_view key, std::string_view v) {
  auto d = text::to_double(v);
  if (!d) bad_value(key, v);
  return *d;
}

int as_int(std::string_view key, std::string_view v) {
  auto i = text::to_int(v);
  if (!i || *i < -(1LL << 31) || *i > (1LL << 31) - 1) bad_value(key, v);
  return static_cast<int>(*i);
}

std::uint64_t as_uint(std::string_view key, std::string_view v) {
  auto u = text::to_uint(v);
  if (!u) bad_value(key, v);
  return *u;
}

bool as_bool(std::string_view key, std::string_view v) {
  auto b = text::to_bool(v);
  if (!b) bad_value(key, v);
  return *b;
}

std::filesystem::path as_path(std::string_view v, const std::filesystem::path& base) {
  std::filesystem::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

Mode parse_mode(std::string_view key, std::string_view v) {
  if (v == "NS_ONLY") return Mode::NsOnly;
  if (v == "DANGER") return Mode::Danger;
  if (v == "HYBRID") return Mode::Hybrid;
  bad_value(key, v);
}

OracleKind parse_oracle(std::string_view key, std::string_view v) {
  if (v == "always_yes") return OracleKind::AlwaysYes;
  if (v == "always_no") return OracleKind::AlwaysNo;
  if (v == "ground_truth") return OracleKind::GroundTruth;
  bad_value(key, v);
}

void require_file(const std::optional<std::filesystem::path>& p, std::string_view what) {
  if (p && !std::filesystem::is_regular_file(*p)) {
    throw ConfigError(fmt::format("config: {} file '{}' does not exist", what, p->string()));
  }
}

void apply_key(RunConfig& c, std::string_view key, std::string_view v,
               const std::filesystem::path& base) {
  using Setter = std::function<void(std::string_view)>;
  const std::map<std::string_view, Setter> setters{
      {"mode", [&](auto x) { c.mode = parse_mode(key, x); }},
      {"topology", [&](auto x) { c.topology = parse_topology(x); }},
      {"L", [&](auto x) { c.pattern_length = as_int(key, x); }},
      {"r", [&](auto x) { c.r = as_int(key, x); }},
      {"tau_act", [&](auto x) { c.lifecycle.tau_act = as_int(key, x); }},
      {"tau_effector", [&](auto x) { c.lifecycle.tau_effector = as_int(key, x); }},
      {"decay", [&](auto x) { c.lifecycle.decay = as_int(key, x); }},
      {"maturation_ticks", [&](auto x) { c.lifecycle.maturation_ticks = as_int(key, x); }},
      {"tolerization_ticks", [&](auto x) { c.lifecycle.tolerization_ticks = as_int(key, x); }},
      {"zone.w_t", [&](auto x) { c.zone.w_time = as_double(key, x); }},
      {"zone.w_o", [&](auto x) { c.zone.w_overlap = as_double(key, x); }},
      {"zone.w_r", [&](auto x) { c.zone.w_resource = as_double(key, x); }},
      {"zone.tau_s", [&](auto x) { c.zone.tau_s = as_double(key, x); }},
      {"zone.theta", [&](auto x) { c.zone.theta = as_double(key, x); }},
      {"monitor.mem_lo", [&](auto x) { c.monitor.mem_lo = as_double(key, x); }},
      {"monitor.mem_hi", [&](auto x) { c.monitor.mem_hi = as_double(key, x); }},
      {"monitor.disk_rate_max", [&](auto x) { c.monitor.disk_rate_max = as_double(key, x); }},
      {"monitor.file_change_baseline",
       [&](auto x) { c.monitor.file_change_baseline = as_double(key, x); }},
      {"monitor.file_change_k", [&](auto x) { c.monitor.file_change_k = as_double(key, x); }},
      {"monitor.window", [&](auto x) { c.monitor.window = as_double(key, x); }},
      {"seed", [&](auto x) { c.seed = as_uint(key, x); }},
      {"scenario_seed", [&](auto x) { c.scenario_seed = as_uint(key, x); }},
      {"detectors", [&](auto x) { c.detectors = as_uint(key, x); }},
      {"n_clones", [&](auto x) { c.n_clones = as_uint(key, x); }},
      {"mutation_rate", [&](auto x) { c.mutation_rate = as_double(key, x); }},
      {"antigen_ttl_ticks", [&](auto x) { c.antigen_ttl_ticks = as_int(key, x); }},
      {"tick_seconds", [&](auto x) { c.tick_seconds = as_double(key, x); }},
      {"oracle", [&](auto x) { c.oracle = parse_oracle(key, x); }},
      {"events", [&](auto x) { c.events_path = as_path(x, base); }},
      {"labels", [&](auto x) { c.labels_path = as_path(x, base); }},
      {"scenario_file",
       [&](auto x) {
         const auto p = as_path(x, base);
         std::ifstream in(p);
         if (!in) throw ConfigError(fmt::format("config: cannot read '{}'", p.string()));
         std::stringstream ss;
         ss << in.rdbuf();
         c.scenario = parse_scenario_spec(ss.str());
       }},
      {"scale.L", [&](auto x) { c.scale.pattern_length = as_int(key, x); }},
      {"scale.r", [&](auto x) { c.scale.r = as_int(key, x); }},
      {"scale.coverage_target", [&](auto x) { c.scale.coverage_target = as_double(key, x); }},
      {"scale.max_candidates", [&](auto x) { c.scale.max_candidates = as_uint(key, x); }},
      {"scale.clustered_self", [&](auto x) { c.scale.clustered_self = as_bool(key, x); }},
      {"scale.self_sizes",
       [&](auto x) {
         c.scale.self_sizes.clear();
         for (auto part : text::split(x, ',')) c.scale.self_sizes.push_back(as_uint(key, text::trim(part)));
       }},
      {"replay.L", [&](auto x) { c.replay.pattern_length = as_int(key, x); }},
      {"replay.r", [&](auto x) { c.replay.r = as_int(key, x); }},
      {"replay.detectors", [&](auto x) { c.replay.detectors = as_uint(key, x); }},
      {"replay.records", [&](auto x) { c.replay.records = as_uint(key, x); }},
      {"replay.tau_act", [&](auto x) { c.replay.lifecycle.tau_act = as_int(key, x); }},
      {"replay.tau_effector", [&](auto x) { c.replay.lifecycle.tau_effector = as_int(key, x); }},
      {"replay.decay", [&](auto x) { c.replay.lifecycle.decay = as_int(key, x); }},
      {"replay.tolerization_ticks",
       [&](auto x) { c.replay.lifecycle.tolerization_ticks = as_int(key, x); }},
      {"replay.influx_every", [&](auto x) { c.replay.options.influx_every = as_uint(key, x); }},
      {"replay.influx_count", [&](auto x) { c.replay.options.influx_count = as_uint(key, x); }},
      {"replay.session", [&](auto x) { c.replay.session_path = as_path(x, base); }},
      {"replay.holdout", [&](auto x) { c.replay.holdout_path = as_path(x, base); }},
  };
  if (auto it = setters.find(key); it != setters.end()) {
    it->second(v);
    return;
  }
  if (key.starts_with("scenario.") && apply_scenario_key(c.scenario, key, v)) return;
  throw ConfigError(fmt::format("config: unknown key '{}'", key));
}

}  // namespace

void RunConfig::validate() const {
  if (pattern_length < 1 || pattern_length > kMaxPatternLength) {
    throw ConfigError(fmt::format("config: L must be in 1..{}", kMaxPatternLength));
  }
  if (r < 1 || r > pattern_length) throw ConfigError("config: r must be in 1..L");
  lifecycle.validate();
  if (lifecycle.maturation_ticks < 1) throw ConfigError("config: maturation_ticks must be >= 1");
  if (detectors == 0) throw ConfigError("config: detectors must be positive");
  if (mode != Mode::NsOnly && topology != Topology::Danger &&
      topology != Topology::DangerExtended) {
    throw ConfigError("config: the engine supports only the DANGER topologies");
  }
  engine_config().validate();
  scenario.validate();
  if (!events_path && scenario.pattern_length != pattern_length) {
    throw ConfigError("config: scenario.pattern_length must equal L");
  }
  if (labels_path && !events_path) throw ConfigError("config: labels given without events");
  require_file(events_path, "events");
  require_file(labels_path, "labels");

  if (scale.pattern_length < 1 || scale.pattern_length > 14) {
    throw ConfigError("config: scale.L must be in 1..14");
  }
  if (scale.r < 1 || scale.r > scale.pattern_length) throw ConfigError("config: scale.r out of range");
  if (!(scale.coverage_target > 0.0 && scale.coverage_target <= 1.0)) {
    throw ConfigError("config: scale.coverage_target must be in (0, 1]");
  }
  if (scale.max_candidates == 0) throw ConfigError("config: scale.max_candidates must be positive");
  const std::size_t universe = std::size_t{1} << scale.pattern_length;
  for (std::size_t s : scale.self_sizes) {
    if (s > universe) throw ConfigError("config: scale.self_sizes exceeds 2^scale.L");
  }

  if (replay.pattern_length < 1 || replay.pattern_length > kMaxPatternLength) {
    throw ConfigError("config: replay.L out of range");
  }
  if (replay.r < 1 || replay.r > replay.pattern_length) throw ConfigError("config: replay.r out of range");
  replay.lifecycle.validate();
  if (replay.holdout_path && !replay.session_path) {
    throw ConfigError("config: replay.holdout given without replay.session");
  }
  require_file(replay.session_path, "replay.session");
  require_file(replay.holdout_path, "replay.holdout");
}

EngineConfig RunConfig::engine_config() const {
  EngineConfig e;
  e.pattern_length = pattern_length;
  e.r = r;
  e.lifecycle = lifecycle;
  e.zone = zone;
  e.monitor = monitor;
  e.topology = mode == Mode::NsOnly ? Topology::Danger : topology;
  e.n_clones = n_clones;
  e.mutation_rate = mutation_rate;
  e.antigen_ttl_ticks = antigen_ttl_ticks;
  e.tick_seconds = tick_seconds;
  e.seed = seed;
  return e;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::size_t bad_line = 0;
  const auto kvs = text::key_values(text, bad_line);
  if (bad_line != 0) throw ConfigError(fmt::format("config: line {} is not key=value", bad_line));
  RunConfig c;
  std::set<std::string> seen;
  for (const auto& kv : kvs) {
    if (!seen.insert(kv.key).second) {
      throw ConfigError(fmt::format("config: line {}: duplicate key '{}'", kv.line, kv.key));
    }
    apply_key(c, kv.key, kv.value, base_dir);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("config: cannot read '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string format_run_config(const RunConfig& c) {
  std::string out;
  auto line = [&](std::string_view k, const auto& v) { out += fmt::format("{}={}\n", k, v); };
  line("mode", to_string(c.mode));
  line("topology", to_string(c.topology));
  line("L", c.pattern_length);
  line("r", c.r);
  line("tau_act", c.lifecycle.tau_act);
  line("tau_effector", c.lifecycle.tau_effector);
  line("decay", c.lifecycle.decay);
  line("maturation_ticks", c.lifecycle.maturation_ticks);
  line("tolerization_ticks", c.lifecycle.tolerization_ticks);
  line("zone.w_t", format_number(c.zone.w_time));
  line("zone.w_o", format_number(c.zone.w_overlap));
  line("zone.w_r", format_number(c.zone.w_resource));
  line("zone.tau_s", format_number(c.zone.tau_s));
  line("zone.theta", format_number(c.zone.theta));
  line("monitor.mem_lo", format_number(c.monitor.mem_lo));
  line("monitor.mem_hi", format_number(c.monitor.mem_hi));
  line("monitor.disk_rate_max", format_number(c.monitor.disk_rate_max));
  line("monitor.file_change_baseline", format_number(c.monitor.file_change_baseline));
  line("monitor.file_change_k", format_number(c.monitor.file_change_k));
  line("monitor.window", format_number(c.monitor.window));
  line("seed", c.seed);
  line("scenario_seed", c.scenario_seed);
  line("detectors", c.detectors);
  line("n_clones", c.n_clones);
  line("mutation_rate", format_number(c.mutation_rate));
  line("antigen_ttl_ticks", c.antigen_ttl_ticks);
  line("tick_seconds", format_number(c.tick_seconds));
  line("oracle", to_string(c.oracle));
  if (c.events_path) line("events", c.events_path->string());
  if (c.labels_path) line("labels", c.labels_path->string());
  std::string sizes;
  for (std::size_t i = 0; i < c.scale.self_sizes.size(); ++i) {
    sizes += fmt::format("{}{}", i ? "," : "", c.scale.self_sizes[i]);
  }
  line("scale.L", c.scale.pattern_length);
  line("scale.r", c.scale.r);
  line("scale.self_sizes", sizes);
  line("scale.coverage_target", format_number(c.scale.coverage_target));
  line("scale.max_candidates", c.scale.max_candidates);
  line("scale.clustered_self", c.scale.clustered_self ? 1 : 0);
  line("replay.L", c.replay.pattern_length);
  line("replay.r", c.replay.r);
  line("replay.detectors", c.replay.detectors);
  line("replay.records", c.replay.records);
  line("replay.tau_act", c.replay.lifecycle.tau_act);
  line("replay.tau_effector", c.replay.lifecycle.tau_effector);
  line("replay.decay", c.replay.lifecycle.decay);
  line("replay.tolerization_ticks", c.replay.lifecycle.tolerization_ticks);
  line("replay.influx_every", c.replay.options.influx_every);
  line("replay.influx_count", c.replay.options.influx_count);
  if (c.replay.session_path) line("replay.session", c.replay.session_path->string());
  if (c.replay.holdout_path) line("replay.holdout", c.replay.holdout_path->string());
  const std::string spec = format_scenario_spec(c.scenario);
  for (auto kv : text::split(spec, '\n')) {
    if (!kv.empty()) out += fmt::format("scenario.{}\n", kv);
  }
  return out;
}

}  // namespace ais
