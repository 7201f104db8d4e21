#pragma once

// Danger-driven detection: monitors turn host events into grounded alarms,
// each alarm defines a zone of causally near antigens, antigen-presenting
// cells co-deliver signals one and two for that zone, and the tick loop
// applies the lifecycle rules and issues quarantine responses.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ais/core_model.hpp"
#include "ais/event_ingest.hpp"
#include "ais/negative_selection.hpp"

namespace ais {

struct MonitorConfig {
  double mem_lo = 32.0e6;   // bytes
  double mem_hi = 512.0e6;  // bytes
  double disk_rate_max = 1000.0;
  double file_change_baseline = 1.0;  // changes per window
  double file_change_k = 3.0;
  double window = 1.0;  // seconds

  /// Throws ConfigError unless lo < hi, k > 1, window > 0 and rates are positive.
  void validate() const;
};

enum class DangerCause { MemoryBand, DiskRate, FileChanges, AbnormalTermination, NonselfPresent };

std::string_view to_string(DangerCause cause);

struct DangerAlarm {
  std::string emitter_id;
  double time = 0.0;
  double strength = 1.0;  // diagnostic only; zone radius does not depend on it
  std::set<std::string> emitter_resources;
  double emitter_start = 0.0;
  DangerCause cause = DangerCause::AbnormalTermination;
  // The event that tripped the monitor, kept for auditing.
  HostEvent trigger;
};

struct ZoneConfig {
  double w_time = 1.0 / 3.0;
  double w_overlap = 1.0 / 3.0;
  double w_resource = 1.0 / 3.0;
  double tau_s = 10.0;  // seconds
  double theta = 0.5;

  void validate() const;
};

struct APCPresentation {
  DangerAlarm alarm;
  std::vector<Antigen> presented;
  bool signal_two = true;
};

/// One alarm per violated monitor, per emitter, per window. Engine-initiated
/// events never raise alarms. Emitter context is taken from the window;
/// callers with a wider view may overwrite it.
/// Throws ContractViolation if `events` is not sorted by time.
std::vector<DangerAlarm> extract_danger(std::span<const HostEvent> events,
                                        const MonitorConfig& cfg);

/// Causal proximity in [0, 1]: weighted start-time closeness, overlap of the
/// antigen's active interval with the alarm window [emitter_start, time], and
/// Jaccard similarity of resource sets.
double proximity(const Antigen& a, const DangerAlarm& alarm, const ZoneConfig& cfg);

/// Antigens of `pool` with proximity >= theta, plus every antigen of the
/// emitter itself. Pool order is preserved.
APCPresentation build_danger_zone(const DangerAlarm& alarm, std::span<const Antigen> pool,
                                  const ZoneConfig& cfg);

struct Stimulus {
  bool s1 = false;
  bool s2 = false;
};

/// Signals delivered by one APC to each detector (aligned with `repertoire`).
std::vector<Stimulus> apc_present(const APCPresentation& apc, std::span<const Detector> repertoire,
                                  int r, Topology topology);

/// Replays the suspect's recorded events in an isolated engine and reports
/// whether any monitor fires there. Events of other sources are ignored.
bool sandbox_confirm(const std::string& suspect_source, std::span<const HostEvent> recorded_events,
                     const MonitorConfig& cfg);

struct Response {
  std::uint64_t tick = 0;
  std::string source_id;
  std::uint64_t detector_id = 0;
  bool engine_initiated = true;
};

/// One line of the audit trail: an alarm or a response.
struct AuditRecord {
  std::uint64_t tick = 0;
  std::string kind;    // ALARM or RESPONSE
  std::string cause;   // danger cause, or QUARANTINE
  std::string source_id;
  std::optional<std::uint64_t> detector_id;

  bool operator==(const AuditRecord&) const = default;
};

void write_audit_log(std::ostream& out, std::span<const AuditRecord> records);
std::string format_audit_record(const AuditRecord& record);

struct EngineConfig {
  int pattern_length = kDefaultPatternLength;
  int r = 12;
  LifecycleParams lifecycle;
  ZoneConfig zone;
  MonitorConfig monitor;
  Topology topology = Topology::Danger;
  std::size_t n_clones = 2;
  double mutation_rate = 0.03;
  // Antigens not seen for this many ticks leave the pool.
  int antigen_ttl_ticks = 3;
  double tick_seconds = 1.0;
  bool quarantine = true;
  bool sandbox = true;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TickResult {
  std::vector<DangerAlarm> alarms;
  std::vector<Response> responses;
  std::vector<std::uint64_t> activated;  // detector ids that became ACTIVATED
};

struct EngineStats {
  std::size_t clones_created = 0;
  std::size_t sandbox_runs = 0;
  std::size_t sandbox_confirmations = 0;
  std::size_t engine_events_seen = 0;
  std::size_t tolerized = 0;
};

class DangerEngine {
 public:
  DangerEngine(EngineConfig cfg, std::vector<Detector> repertoire);

  /// Wires a baseline repertoire in as a NONSELF_PRESENT danger source.
  void attach_nonself_monitor(std::unique_ptr<NsMonitor> monitor);

  /// Advances one tick. `events` must be sorted and belong to this tick.
  TickResult tick(std::span<const HostEvent> events);

  std::uint64_t tick_index() const { return tick_; }
  const std::vector<Detector>& repertoire() const { return repertoire_; }
  const std::vector<Antigen>& pool() const { return pool_; }
  const std::set<std::string>& quarantined() const { return quarantined_; }
  /// Sources that received a response, whether or not quarantine is enabled.
  const std::set<std::string>& responded() const { return responded_; }
  const std::vector<AuditRecord>& audit() const { return audit_; }
  const std::vector<DangerAlarm>& alarm_log() const { return alarm_log_; }
  const EngineStats& stats() const { return stats_; }
  const EngineConfig& config() const { return cfg_; }

  /// Detectors keep their slot after death only until the end of the tick.
  const Detector* find_detector(std::uint64_t id) const;

 private:
  void ingest(std::span<const HostEvent> events);
  bool confirm_in_sandbox(const std::string& source);
  void quarantine(const std::string& source, std::uint64_t detector_id, TickResult& out);

  EngineConfig cfg_;
  std::vector<Detector> repertoire_;
  std::vector<Antigen> pool_;
  SourceRegistry registry_;
  std::map<std::string, std::vector<HostEvent>> history_;
  std::set<std::string> quarantined_;
  std::set<std::string> responded_;
  std::vector<HostEvent> pending_;
  std::vector<AuditRecord> audit_;
  std::vector<DangerAlarm> alarm_log_;
  std::unique_ptr<NsMonitor> nonself_;
  EngineStats stats_;
  std::uint64_t tick_ = 0;
  std::uint64_t next_id_ = 0;
};

}  // namespace ais
