#pragma once

// Host event logs: the record type, the line-oriented text format, label
// tables, and the synthetic scenario generator.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ais/core_model.hpp"

namespace ais {

enum class EventKind { MetricMem, MetricDisk, FileChange, ProcTerm, Connection, Heartbeat };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct HostEvent {
  double time = 0.0;
  std::string source_id;
  EventKind kind = EventKind::Heartbeat;
  // Metric sample (bytes, ops/s), or the exit code for PROC_TERM.
  double value = 0.0;
  std::optional<Pattern> pattern;
  std::set<std::string> resources;
  bool engine_initiated = false;

  bool abnormal_termination() const { return kind == EventKind::ProcTerm && value != 0.0; }

  friend bool operator==(const HostEvent&, const HostEvent&) = default;
};

inline constexpr std::string_view kEventSchemaHeader = "#schema=ais-events-v1";

/// Reads an event log. Blank lines and '#' comments are skipped; a
/// "#schema=" line must name ais-events-v1. Throws DataError naming the line
/// and field for malformed records and for decreasing timestamps.
std::vector<HostEvent> parse_event_log(std::istream& in);
std::vector<HostEvent> parse_event_log(std::string_view text);

/// Canonical text form: header line, then one tab-separated record per event.
void write_event_log(std::ostream& out, const std::vector<HostEvent>& events);
std::string serialize_event_log(const std::vector<HostEvent>& events);
std::string format_event(const HostEvent& e);

/// Shortest decimal text that round-trips the value exactly.
std::string format_number(double value);

using LabelTable = std::map<std::string, Label>;

LabelTable parse_label_table(std::istream& in);
LabelTable parse_label_table(std::string_view text);
void write_label_table(std::ostream& out, const LabelTable& labels);

/// Per-source context accumulated from an event stream: when each source
/// started, which resources it touched, and which patterns it showed.
class SourceRegistry {
 public:
  struct Source {
    double first_seen = 0.0;
    double last_seen = 0.0;
    std::set<std::string> resources;
  };

  void observe(const HostEvent& e);
  const Source* find(const std::string& source_id) const;
  const std::map<std::string, Source>& sources() const { return sources_; }

 private:
  std::map<std::string, Source> sources_;
};

/// Builds one antigen per (source, pattern) pair seen in `events`, using the
/// source's first appearance as start time and the span over which that
/// pattern was observed as active interval. Engine-initiated events are ignored.
std::vector<Antigen> antigens_from_events(const std::vector<HostEvent>& events,
                                          const LabelTable* labels = nullptr);

struct MetricProfile {
  double mem_lo = 0.0;  // bytes
  double mem_hi = 0.0;
  double disk_lo = 0.0;  // ops/s
  double disk_hi = 0.0;
  double file_changes_per_tick = 0.0;
};

struct ScenarioSpec {
  int duration_ticks = 500;
  int n_self_sources = 90;
  int n_attack_sources = 10;
  int pattern_length = kDefaultPatternLength;
  double tick_seconds = 1.0;
  // Attacks never start before this tick; gives a clean self-only prefix.
  int attack_start_min = 60;
  // Self sources start within [0, self_start_spread) ticks.
  int self_start_spread = 20;
  // Self sources report memory/disk every this many ticks.
  int metric_period = 5;
  int resource_pool = 40;
  MetricProfile self_profile{64.0e6, 256.0e6, 10.0, 200.0, 0.2};
  // Attack metrics: memory sampled in [mem_lo, mem_hi], usually out of band.
  MetricProfile attack_profile{1.2e9, 2.0e9, 10.0, 200.0, 0.0};
  double attack_abort_probability = 0.2;
  // Per-tick probability that a self source changes its pattern.
  double drift = 0.001;
  // Per-bit flip probability when a self source drifts.
  double drift_bit_flip = 0.3;
  // Per-tick probability that a self source is restarted by an engine-initiated kill.
  double engine_kill_rate = 0.0005;
  bool attack_correlation = true;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Reads a flat key=value file ('#' comments) into a ScenarioSpec, starting
/// from defaults. Unknown keys are an error. Keys may carry a "scenario." prefix.
ScenarioSpec parse_scenario_spec(std::string_view text);
/// Applies one key=value pair; returns false if the key is not a scenario key.
bool apply_scenario_key(ScenarioSpec& spec, std::string_view key, std::string_view value);
std::string format_scenario_spec(const ScenarioSpec& spec);

struct Scenario {
  std::vector<HostEvent> events;
  LabelTable labels;
};

/// Deterministic synthetic log. Self sources emit connection antigens every
/// tick with in-band metrics and may drift to new patterns. Attack sources
/// appear after `attack_start_min` and, with attack_correlation, emit
/// out-of-band memory and abnormal terminations from their own context every
/// tick; without it, the damage surfaces on an unrelated self source instead.
Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace ais
