// aisim: command-line driver for the detection engine and its experiments.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 malformed input data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/harness.hpp"

namespace fs = std::filesystem;

namespace {

enum class Level { Error = 0, Info = 1, Debug = 2 };
Level g_level = Level::Error;

template <typename... Args>
void log(Level level, fmt::format_string<Args...> f, Args&&... args) {
  if (level > g_level) return;
  static constexpr const char* kNames[] = {"error", "info", "debug"};
  std::cerr << "aisim: " << kNames[static_cast<int>(level)] << ": "
            << fmt::format(f, std::forward<Args>(args)...) << '\n';
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ais::RunConfig load(const Common& c) {
  ais::RunConfig cfg = c.config.empty() ? ais::RunConfig{} : ais::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ais::ConfigError(fmt::format("cannot write '{}'", path.string()));
  f << text;
  log(Level::Info, "wrote {}", path.string());
}

// Prints to stdout when no output directory is given.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  write_file(fs::path(c.out) / name, text);
}

std::string trace_text(const std::vector<ais::AuditRecord>& trace) {
  std::ostringstream s;
  ais::write_audit_log(s, trace);
  return s.str();
}

void prepare_out(const Common& c) {
  if (!c.out.empty()) fs::create_directories(c.out);
}

void cmd_run(const Common& c, const std::string& mode) {
  ais::RunConfig cfg = load(c);
  if (!mode.empty()) {
    auto over = ais::parse_run_config("mode=" + mode);
    cfg.mode = over.mode;
    cfg.validate();
  }
  log(Level::Info, "running {} with {} detectors", ais::to_string(cfg.mode), cfg.detectors);
  const ais::Report rep = ais::run_experiment(cfg);
  prepare_out(c);
  std::string text = ais::format_report(rep);
  if (!c.out.empty()) {
    write_file(fs::path(c.out) / "trace.tsv", trace_text(rep.trace));
    text += "trace_file: trace.tsv\n";
  }
  emit(c, "report.txt", text);
}

void cmd_compare(const Common& c, const std::string& config_b) {
  ais::RunConfig a = load(c);
  ais::RunConfig b = a;
  if (!config_b.empty()) {
    b = ais::load_run_config(config_b);
    if (c.seed) b.seed = *c.seed;
  } else {
    a.mode = ais::Mode::NsOnly;
    b.mode = ais::Mode::Danger;
  }
  const ais::Comparison cmp = ais::compare_modes(a, b);
  prepare_out(c);
  std::string text = ais::format_comparison(cmp);
  if (!c.out.empty()) {
    write_file(fs::path(c.out) / "trace_a.tsv", trace_text(cmp.a.trace));
    write_file(fs::path(c.out) / "trace_b.tsv", trace_text(cmp.b.trace));
    text += "trace_a_file: trace_a.tsv\ntrace_b_file: trace_b.tsv\n";
  }
  emit(c, "comparison.txt", text);
}

void cmd_scale(const Common& c) {
  const ais::RunConfig cfg = load(c);
  prepare_out(c);
  emit(c, "scaling.txt", ais::format_scaling_table(ais::scaling_probe(cfg.scale, cfg.seed)));
}

void cmd_topo(const Common& c, const std::string& scenario_file, const std::string& topology,
              bool dump) {
  const std::uint64_t seed = c.seed.value_or(ais::RunConfig{}.seed);
  ais::TopologyScenario sc;
  if (scenario_file.empty()) {
    sc = ais::canonical_topology_scenario(seed);
  } else {
    std::ifstream in(scenario_file);
    if (!in) throw ais::ConfigError(fmt::format("cannot read '{}'", scenario_file));
    std::stringstream ss;
    ss << in.rdbuf();
    sc = ais::parse_topology_scenario(ss.str());
  }
  prepare_out(c);
  if (dump) emit(c, "topology_scenario.tsv", ais::serialize_topology_scenario(sc));
  std::vector<ais::SignalOutcome> outcomes;
  if (topology.empty()) {
    for (ais::Topology t : ais::kAllTopologies) outcomes.push_back(ais::simulate_signal_model(t, sc));
  } else {
    outcomes.push_back(ais::simulate_signal_model(ais::parse_topology(topology), sc));
  }
  emit(c, "topologies.tsv", ais::format_signal_outcomes(outcomes));
}

void cmd_gen(const Common& c) {
  ais::RunConfig cfg = c.config.empty() ? ais::RunConfig{} : ais::load_run_config(c.config);
  if (c.seed) cfg.scenario_seed = *c.seed;
  cfg.scenario.validate();
  const ais::Scenario s = ais::generate_scenario(cfg.scenario, cfg.scenario_seed);
  prepare_out(c);
  emit(c, "events.log", ais::serialize_event_log(s.events));
  std::ostringstream labels;
  ais::write_label_table(labels, s.labels);
  if (!c.out.empty()) write_file(fs::path(c.out) / "labels.tsv", labels.str());
}

void cmd_replay(const Common& c) {
  const ais::RunConfig cfg = load(c);
  const ais::ReplayReport rep = ais::run_replay(cfg.replay, cfg.seed);
  prepare_out(c);
  if (!c.out.empty()) {
    std::string online = "#index\tdoc_id\tinterest\tscore\n";
    const auto& scores = rep.result.metrics.online_scores;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      online += fmt::format("{}\t{}\t{}\t{}\n", i, scores[i].doc_id, scores[i].interest ? 1 : 0,
                            scores[i].score);
    }
    write_file(fs::path(c.out) / "online_scores.tsv", online);
    std::string held = "#doc_id\tinterest\tscore\n";
    for (const auto& s : rep.held_out_scores) {
      held += fmt::format("{}\t{}\t{}\n", s.doc_id, s.interest ? 1 : 0, s.score);
    }
    write_file(fs::path(c.out) / "held_out_scores.tsv", held);
  }
  emit(c, "replay.txt", ais::format_replay_report(rep));
}

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* opt = sub->add_option("--config", c.config, "key=value configuration file");
  if (needs_config) opt->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "override the configured seed");
  sub->add_option("--out", c.out, "output directory (stdout when omitted)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Danger-driven anomaly detection simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string level = "quiet";
  app.add_option("--log-level", level, "quiet, info or debug (diagnostics go to stderr)")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  Common common;
  std::string mode;
  std::string config_b;
  std::string scenario_file;
  std::string topology;
  bool dump = false;

  auto* run = app.add_subcommand("run", "run one mode end to end");
  add_common(run, common, true);
  run->add_option("--mode", mode, "NS_ONLY, DANGER or HYBRID (overrides config)");

  auto* compare = app.add_subcommand("compare", "compare two runs on the same scenario");
  add_common(compare, common, true);
  compare->add_option("--config-b", config_b, "second configuration (default: NS_ONLY vs DANGER)")
      ->check(CLI::ExistingFile);

  auto* scale = app.add_subcommand("scale", "negative-selection scaling probe");
  add_common(scale, common, true);

  auto* topo = app.add_subcommand("topo", "compare the six signal topologies");
  add_common(topo, common, false);
  topo->add_option("--scenario", scenario_file, "topology scenario file")->check(CLI::ExistingFile);
  topo->add_option("--topology", topology, "run only this topology");
  topo->add_flag("--dump-scenario", dump, "also write the scenario that was simulated");

  auto* gen = app.add_subcommand("gen", "generate a synthetic event log and labels");
  add_common(gen, common, true);

  auto* replay = app.add_subcommand("replay", "interest-filter session replay");
  add_common(replay, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  g_level = level == "debug" ? Level::Debug : level == "info" ? Level::Info : Level::Error;

  try {
    if (*run) cmd_run(common, mode);
    else if (*compare) cmd_compare(common, config_b);
    else if (*scale) cmd_scale(common);
    else if (*topo) cmd_topo(common, scenario_file, topology, dump);
    else if (*gen) cmd_gen(common);
    else if (*replay) cmd_replay(common);
  } catch (const ais::DataError& e) {
    log(Level::Error, "{}", e.what());
    return 3;
  } catch (const ais::ConfigError& e) {
    log(Level::Error, "{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::Error, "{}", e.what());
    return 1;
  }
  return 0;
}
