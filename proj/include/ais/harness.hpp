#pragma once

// Experiment driver: configuration, end-to-end runs of the baseline and
// danger regimes, side-by-side comparison, the negative-selection scaling
// probe, and the six-topology signal simulator.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ais/core_model.hpp"
#include "ais/danger_engine.hpp"
#include "ais/event_ingest.hpp"
#include "ais/interest_filter.hpp"

namespace ais {

enum class Mode { NsOnly, Danger, Hybrid };
enum class OracleKind { AlwaysYes, AlwaysNo, GroundTruth };

std::string_view to_string(Mode mode);
std::string_view to_string(OracleKind oracle);

struct ScaleSettings {
  int pattern_length = 12;
  int r = 6;
  std::vector<std::size_t> self_sizes{16, 64, 256};
  double coverage_target = 0.95;
  std::size_t max_candidates = 1 << 16;
  bool clustered_self = true;
};

struct ReplaySettings {
  int pattern_length = 32;
  int r = 8;
  std::size_t detectors = 500;
  std::size_t records = 50;
  LifecycleParams lifecycle{3, 5, 0, 1, 1};
  ReplayOptions options;
  std::optional<std::filesystem::path> session_path;
  std::optional<std::filesystem::path> holdout_path;
};

struct RunConfig {
  Mode mode = Mode::Danger;
  Topology topology = Topology::Danger;
  int pattern_length = kDefaultPatternLength;
  int r = 12;
  // maturation_ticks doubles as the self-observation window of the baseline.
  LifecycleParams lifecycle{3, 5, 1, 50, 1};
  ZoneConfig zone;
  MonitorConfig monitor;
  std::uint64_t seed = 7;
  std::uint64_t scenario_seed = 42;
  std::size_t detectors = 2000;
  std::size_t n_clones = 2;
  double mutation_rate = 0.03;
  int antigen_ttl_ticks = 3;
  double tick_seconds = 1.0;
  OracleKind oracle = OracleKind::AlwaysYes;
  std::optional<std::filesystem::path> events_path;
  std::optional<std::filesystem::path> labels_path;
  ScenarioSpec scenario;
  ScaleSettings scale;
  ReplaySettings replay;

  /// Range checks plus existence of every referenced file. Throws ConfigError.
  void validate() const;
  EngineConfig engine_config() const;
};

/// Parses flat key=value text ('#' comments). Relative paths resolve against
/// `base_dir`. Throws ConfigError on unknown keys or bad values.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& cfg);

struct Report {
  std::string mode;
  std::size_t labeled_sources = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t unlabeled_flagged = 0;
  // Ticks from the first attack event to the first correct response.
  std::optional<std::uint64_t> detection_latency;
  std::optional<double> mean_source_latency;
  std::size_t detector_budget = 0;
  std::size_t mature_detectors = 0;
  std::size_t clones_created = 0;
  std::size_t operator_calls = 0;
  std::size_t alarms = 0;
  std::size_t responses = 0;
  std::size_t engine_events_seen = 0;
  // Alarms whose triggering event was engine-initiated. Must stay zero.
  std::size_t feedback_alarms = 0;
  std::size_t ticks = 0;
  std::vector<AuditRecord> trace;

  double fp_rate() const;
  double fn_rate() const;
};

std::string format_report(const Report& report);

/// Loads or generates the configured event log and labels.
Scenario load_scenario(const RunConfig& cfg);

/// Runs the configured mode end to end. Deterministic per seeds.
Report run_experiment(const RunConfig& cfg);
Report run_experiment(const RunConfig& cfg, const Scenario& scenario);

struct Comparison {
  Report a;
  Report b;
  double delta_fp_rate = 0.0;
  double delta_fn_rate = 0.0;
  std::optional<double> delta_latency;
  long long delta_operator_calls = 0;
  long long delta_fp = 0;
  long long delta_tp = 0;
};

/// Runs both configurations on the same scenario. Throws ConfigError when
/// they do not share scenario, seeds, and detector budget.
Comparison compare_modes(const RunConfig& a, const RunConfig& b);
std::string format_comparison(const Comparison& c);

struct ScalingRow {
  std::size_t self_size = 0;
  std::size_t nonself_size = 0;
  // Candidates generated before censoring; nullopt when saturated.
  std::optional<std::size_t> candidates_needed;
  std::size_t survivors = 0;
  double coverage = 0.0;
  // Best coverage any self-tolerant receptor set could reach.
  double coverage_ceiling = 0.0;
  bool saturated = false;
};

struct ScalingTable {
  int pattern_length = 0;
  int r = 0;
  double target = 0.0;
  std::vector<ScalingRow> rows;
  bool nondecreasing = true;
};

/// For each self size, the smallest number of random candidates whose
/// censored survivors cover at least `target` of non-self (checked
/// exhaustively). Self sets are nested across sizes. Requires L <= 14.
ScalingTable scaling_probe(const ScaleSettings& settings, std::uint64_t seed);
std::string format_scaling_table(const ScalingTable& table);

enum class AntigenClass { Self, ForeignHarmless, ForeignDangerous };
std::string_view to_string(AntigenClass cls);

struct TopologyAntigen {
  Antigen antigen;
  AntigenClass cls = AntigenClass::Self;
  std::optional<bool> pamp;
  std::optional<bool> damaging;
  std::optional<int> apc_group;
};

struct TopologyScenario {
  int pattern_length = 16;
  int r = 10;
  int ticks = 10;
  LifecycleParams lifecycle{3, 5, 1, 1, 1};
  ZoneConfig zone;
  std::vector<TopologyAntigen> antigens;
  std::vector<Pattern> detectors;  // mature, uncensored
  // Permission repertoire standing in for T help; required by the
  // TWO_SIGNAL and THREE_PARTY topologies.
  std::optional<std::vector<Pattern>> helpers;
};

struct SignalOutcome {
  Topology topology = Topology::Burnet;
  std::size_t responses_self = 0;
  std::size_t responses_harmless = 0;
  std::size_t responses_dangerous = 0;
  std::size_t activations = 0;
  std::size_t deaths = 0;
};

/// Runs the shared tick loop under one topology's signal-two rules.
/// Throws DataError when the scenario lacks annotations the topology needs.
SignalOutcome simulate_signal_model(Topology topology, const TopologyScenario& scenario);

/// Self, gut-bacteria-like harmless foreign (PAMP but no damage), and
/// dangerous foreign antigens, with one uncensored detector per antigen and
/// a helper repertoire censored against self.
TopologyScenario canonical_topology_scenario(std::uint64_t seed);

TopologyScenario parse_topology_scenario(std::string_view text);
std::string serialize_topology_scenario(const TopologyScenario& scenario);
std::string format_signal_outcomes(const std::vector<SignalOutcome>& outcomes);

/// Interest-filter replay driver used by the CLI.
struct ReplayReport {
  ReplayResult result;
  std::vector<DocumentScore> held_out_scores;
  double auc = 0.0;
  std::size_t survivors = 0;
};

ReplayReport run_replay(const ReplaySettings& settings, std::uint64_t seed);
std::string format_replay_report(const ReplayReport& report);

}  // namespace ais
