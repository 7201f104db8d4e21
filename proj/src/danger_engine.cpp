#include "ais/danger_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/rng.hpp"

namespace ais {

void MonitorConfig::validate() const {
  if (!(mem_lo < mem_hi)) throw ConfigError("monitor memory band requires lo < hi");
  if (mem_lo < 0) throw ConfigError("monitor memory band must be non-negative");
  if (!(disk_rate_max > 0)) throw ConfigError("monitor disk_rate_max must be > 0");
  if (!(file_change_baseline > 0)) throw ConfigError("monitor file_change_baseline must be > 0");
  if (!(file_change_k > 1)) throw ConfigError("monitor file_change_k must be > 1");
  if (!(window > 0)) throw ConfigError("monitor window must be > 0");
}

void ZoneConfig::validate() const {
  if (w_time < 0 || w_overlap < 0 || w_resource < 0) {
    throw ConfigError("zone weights must be non-negative");
  }
  if (std::abs(w_time + w_overlap + w_resource - 1.0) > 1e-9) {
    throw ConfigError("zone weights must sum to 1");
  }
  if (!(tau_s > 0)) throw ConfigError("zone tau_s must be > 0");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("zone theta must be in [0, 1]");
}

void EngineConfig::validate() const {
  if (pattern_length < 1 || pattern_length > kMaxPatternLength) {
    throw ConfigError("pattern length must be in [1, 64]");
  }
  if (r < 1 || r > pattern_length) throw ConfigError("r must be in [1, L]");
  lifecycle.validate();
  zone.validate();
  monitor.validate();
  if (topology != Topology::Danger && topology != Topology::DangerExtended) {
    throw ConfigError("the danger engine runs under DANGER or DANGER_EXTENDED topology");
  }
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
    throw ConfigError("mutation_rate must be in [0, 1]");
  }
  if (antigen_ttl_ticks < 1) throw ConfigError("antigen_ttl_ticks must be >= 1");
  if (!(tick_seconds > 0)) throw ConfigError("tick_seconds must be > 0");
}

std::string_view to_string(DangerCause cause) {
  switch (cause) {
    case DangerCause::MemoryBand: return "MEMORY_BAND";
    case DangerCause::DiskRate: return "DISK_RATE";
    case DangerCause::FileChanges: return "FILE_CHANGES";
    case DangerCause::AbnormalTermination: return "ABNORMAL_TERMINATION";
    case DangerCause::NonselfPresent: return "NONSELF_PRESENT";
  }
  return "?";
}

std::vector<DangerAlarm> extract_danger(std::span<const HostEvent> events,
                                        const MonitorConfig& cfg) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].time < events[i - 1].time) {
      throw ContractViolation("extract_danger requires events sorted by time");
    }
  }

  struct Candidate {
    double strength = 0.0;
    const HostEvent* trigger = nullptr;
  };
  struct EmitterWindow {
    double start = std::numeric_limits<double>::infinity();
    std::set<std::string> resources;
    int file_changes = 0;
    std::map<DangerCause, Candidate> violations;
  };
  // (window index, emitter) keeps output ordered by window, then emitter.
  std::map<std::pair<std::int64_t, std::string>, EmitterWindow> windows;

  const double file_limit = cfg.file_change_k * cfg.file_change_baseline;
  auto note = [](EmitterWindow& w, DangerCause cause, double strength, const HostEvent& e) {
    Candidate& c = w.violations[cause];
    if (c.trigger == nullptr || strength > c.strength) c = {std::min(1.0, strength), &e};
  };

  for (const HostEvent& e : events) {
    if (e.engine_initiated) continue;
    const auto index = static_cast<std::int64_t>(std::floor(e.time / cfg.window));
    EmitterWindow& w = windows[{index, e.source_id}];
    w.start = std::min(w.start, e.time);
    w.resources.insert(e.resources.begin(), e.resources.end());

    switch (e.kind) {
      case EventKind::MetricMem:
        if (e.value > cfg.mem_hi) {
          note(w, DangerCause::MemoryBand, (e.value - cfg.mem_hi) / cfg.mem_hi, e);
        } else if (e.value < cfg.mem_lo) {
          note(w, DangerCause::MemoryBand, (cfg.mem_lo - e.value) / cfg.mem_lo, e);
        }
        break;
      case EventKind::MetricDisk:
        if (e.value > cfg.disk_rate_max) {
          note(w, DangerCause::DiskRate, (e.value - cfg.disk_rate_max) / cfg.disk_rate_max, e);
        }
        break;
      case EventKind::FileChange:
        ++w.file_changes;
        if (w.file_changes > file_limit) {
          note(w, DangerCause::FileChanges, (w.file_changes - file_limit) / file_limit, e);
        }
        break;
      case EventKind::ProcTerm:
        if (e.abnormal_termination()) note(w, DangerCause::AbnormalTermination, 1.0, e);
        break;
      case EventKind::Connection:
      case EventKind::Heartbeat:
        break;
    }
  }

  std::vector<DangerAlarm> alarms;
  for (const auto& [key, w] : windows) {
    for (const auto& [cause, c] : w.violations) {
      DangerAlarm alarm;
      alarm.emitter_id = key.second;
      alarm.time = c.trigger->time;
      alarm.strength = c.strength;
      alarm.emitter_resources = w.resources;
      alarm.emitter_start = w.start;
      alarm.cause = cause;
      alarm.trigger = *c.trigger;
      alarms.push_back(std::move(alarm));
    }
  }
  return alarms;
}

double proximity(const Antigen& a, const DangerAlarm& alarm, const ZoneConfig& cfg) {
  const double start_gap = std::abs(a.start_time - alarm.emitter_start);
  const double closeness = std::isfinite(start_gap) ? std::exp(-start_gap / cfg.tau_s) : 0.0;

  const double w0 = std::min(alarm.emitter_start, alarm.time);
  const double w1 = std::max(alarm.emitter_start, alarm.time);
  double overlap = 0.0;
  if (w1 > w0) {
    const double lo = std::max(w0, a.active_from);
    const double hi = std::min(w1, a.active_to);
    overlap = std::max(0.0, hi - lo) / (w1 - w0);
  } else {
    overlap = (a.active_from <= w0 && w0 <= a.active_to) ? 1.0 : 0.0;
  }

  double jaccard = 0.0;
  if (!a.resources.empty() || !alarm.emitter_resources.empty()) {
    std::size_t shared = 0;
    for (const auto& r : a.resources) shared += alarm.emitter_resources.count(r);
    const std::size_t total = a.resources.size() + alarm.emitter_resources.size() - shared;
    jaccard = static_cast<double>(shared) / static_cast<double>(total);
  }

  const double p = cfg.w_time * closeness + cfg.w_overlap * overlap + cfg.w_resource * jaccard;
  return std::clamp(p, 0.0, 1.0);
}

APCPresentation build_danger_zone(const DangerAlarm& alarm, std::span<const Antigen> pool,
                                  const ZoneConfig& cfg) {
  APCPresentation apc;
  apc.alarm = alarm;
  for (const Antigen& a : pool) {
    if (a.source_id == alarm.emitter_id || proximity(a, alarm, cfg) >= cfg.theta) {
      apc.presented.push_back(a);
    }
  }
  return apc;
}

std::vector<Stimulus> apc_present(const APCPresentation& apc, std::span<const Detector> repertoire,
                                  int r, Topology topology) {
  std::vector<Stimulus> out(repertoire.size());
  for (std::size_t i = 0; i < repertoire.size(); ++i) {
    const Detector& d = repertoire[i];
    if (!d.alive()) continue;
    const bool hit = std::any_of(apc.presented.begin(), apc.presented.end(),
                                 [&](const Antigen& a) { return matches(d.receptor, a.pattern, r); });
    if (!hit) continue;
    out[i].s1 = true;
    out[i].s2 = apc.signal_two && signal2_permitted(topology, Signal2Source::Apc, d.state);
  }
  return out;
}

bool sandbox_confirm(const std::string& suspect_source, std::span<const HostEvent> recorded_events,
                     const MonitorConfig& cfg) {
  std::vector<HostEvent> replay;
  for (const HostEvent& e : recorded_events) {
    if (e.source_id == suspect_source && !e.engine_initiated) replay.push_back(e);
  }
  if (replay.empty()) return false;
  std::stable_sort(replay.begin(), replay.end(),
                   [](const HostEvent& a, const HostEvent& b) { return a.time < b.time; });
  // The replay sees nothing but the suspect, so any alarm is the suspect's own.
  return !extract_danger(replay, cfg).empty();
}

std::string format_audit_record(const AuditRecord& record) {
  return fmt::format("{}\t{}\t{}\t{}\t{}", record.tick, record.kind, record.cause,
                     record.source_id,
                     record.detector_id ? std::to_string(*record.detector_id) : std::string("-"));
}

void write_audit_log(std::ostream& out, std::span<const AuditRecord> records) {
  out << "#tick\tkind\tcause\tsource_id\tdetector_id\n";
  for (const auto& r : records) out << format_audit_record(r) << '\n';
}

DangerEngine::DangerEngine(EngineConfig cfg, std::vector<Detector> repertoire)
    : cfg_(std::move(cfg)), repertoire_(std::move(repertoire)) {
  cfg_.validate();
  for (const Detector& d : repertoire_) {
    if (d.receptor.length() != cfg_.pattern_length) {
      throw ConfigError("detector receptor length differs from the engine pattern length");
    }
    next_id_ = std::max(next_id_, d.id + 1);
  }
}

void DangerEngine::attach_nonself_monitor(std::unique_ptr<NsMonitor> monitor) {
  nonself_ = std::move(monitor);
}

const Detector* DangerEngine::find_detector(std::uint64_t id) const {
  for (const Detector& d : repertoire_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

void DangerEngine::ingest(std::span<const HostEvent> events) {
  for (const HostEvent& e : events) {
    if (e.engine_initiated || quarantined_.count(e.source_id)) continue;
    registry_.observe(e);
    history_[e.source_id].push_back(e);
    if (!e.pattern) continue;
    if (e.pattern->length() != cfg_.pattern_length) {
      throw ConfigError("event pattern length differs from the engine pattern length");
    }
    auto it = std::find_if(pool_.begin(), pool_.end(), [&](const Antigen& a) {
      return a.source_id == e.source_id && a.pattern == *e.pattern;
    });
    if (it == pool_.end()) {
      Antigen a;
      a.pattern = *e.pattern;
      a.source_id = e.source_id;
      a.active_from = e.time;
      pool_.push_back(std::move(a));
      it = std::prev(pool_.end());
    }
    it->active_to = e.time;
  }
  const double horizon =
      static_cast<double>(tick_) * cfg_.tick_seconds - cfg_.antigen_ttl_ticks * cfg_.tick_seconds;
  std::erase_if(pool_, [&](const Antigen& a) { return a.active_to < horizon; });
  for (Antigen& a : pool_) {
    const auto* src = registry_.find(a.source_id);
    a.start_time = src->first_seen;
    a.resources = src->resources;
  }
}

bool DangerEngine::confirm_in_sandbox(const std::string& source) {
  ++stats_.sandbox_runs;
  auto it = history_.find(source);
  if (it == history_.end()) return false;
  const bool confirmed = sandbox_confirm(source, it->second, cfg_.monitor);
  if (confirmed) ++stats_.sandbox_confirmations;
  return confirmed;
}

void DangerEngine::quarantine(const std::string& source, std::uint64_t detector_id,
                              TickResult& out) {
  if (!responded_.insert(source).second) return;
  audit_.push_back({tick_, "RESPONSE", "QUARANTINE", source, detector_id});
  out.responses.push_back(Response{tick_, source, detector_id, true});
  if (!cfg_.quarantine) return;
  quarantined_.insert(source);
  std::erase_if(pool_, [&](const Antigen& a) { return a.source_id == source; });
  // The quarantined process dies a normal, engine-initiated death next tick.
  HostEvent kill;
  kill.time = static_cast<double>(tick_ + 1) * cfg_.tick_seconds;
  kill.source_id = source;
  kill.kind = EventKind::ProcTerm;
  kill.value = 9.0;
  kill.engine_initiated = true;
  pending_.push_back(std::move(kill));
}

TickResult DangerEngine::tick(std::span<const HostEvent> events) {
  TickResult out;

  std::vector<HostEvent> all;
  all.reserve(pending_.size() + events.size());
  all.insert(all.end(), pending_.begin(), pending_.end());
  all.insert(all.end(), events.begin(), events.end());
  pending_.clear();
  std::stable_sort(all.begin(), all.end(),
                   [](const HostEvent& a, const HostEvent& b) { return a.time < b.time; });
  for (const HostEvent& e : all) stats_.engine_events_seen += e.engine_initiated ? 1 : 0;

  // (1) antigen pool
  ingest(all);

  // (2) danger signals. Engine-initiated events pass through so the monitors,
  // not the caller, are what keep them from raising danger.
  std::vector<HostEvent> visible;
  visible.reserve(all.size());
  for (const HostEvent& e : all) {
    if (e.engine_initiated || !quarantined_.count(e.source_id)) visible.push_back(e);
  }
  std::vector<DangerAlarm> alarms = extract_danger(visible, cfg_.monitor);
  for (DangerAlarm& alarm : alarms) {
    if (const auto* src = registry_.find(alarm.emitter_id)) {
      alarm.emitter_start = src->first_seen;
      alarm.emitter_resources = src->resources;
    }
  }
  if (nonself_) {
    for (const HostEvent& e : all) {
      if (!e.pattern || e.engine_initiated || quarantined_.count(e.source_id)) continue;
      auto it = std::find_if(pool_.begin(), pool_.end(), [&](const Antigen& a) {
        return a.source_id == e.source_id && a.pattern == *e.pattern;
      });
      if (it == pool_.end()) continue;
      for (const NsAlarm& ns : nonself_->present(*it)) {
        DangerAlarm alarm;
        alarm.emitter_id = e.source_id;
        alarm.time = e.time;
        alarm.strength = 1.0;
        alarm.emitter_start = it->start_time;
        alarm.emitter_resources = it->resources;
        alarm.cause = DangerCause::NonselfPresent;
        alarm.trigger = e;
        audit_.push_back({tick_, "ALARM", std::string(to_string(alarm.cause)), alarm.emitter_id,
                          ns.detector_id});
        out.alarms.push_back(alarm);
      }
    }
  }
  for (const DangerAlarm& alarm : alarms) {
    audit_.push_back(
        {tick_, "ALARM", std::string(to_string(alarm.cause)), alarm.emitter_id, std::nullopt});
  }
  out.alarms.insert(out.alarms.end(), alarms.begin(), alarms.end());

  // (3) zones and APC co-presentation
  std::vector<Stimulus> stimulus(repertoire_.size());
  std::vector<bool> co_presented(pool_.size(), false);
  for (const DangerAlarm& alarm : out.alarms) {
    APCPresentation apc = build_danger_zone(alarm, pool_, cfg_.zone);
    for (const Antigen& a : apc.presented) {
      for (std::size_t i = 0; i < pool_.size(); ++i) {
        if (pool_[i].source_id == a.source_id && pool_[i].pattern == a.pattern) {
          co_presented[i] = true;
        }
      }
    }
    const auto delivered = apc_present(apc, repertoire_, cfg_.r, cfg_.topology);
    for (std::size_t i = 0; i < delivered.size(); ++i) {
      stimulus[i].s1 = stimulus[i].s1 || delivered[i].s1;
      stimulus[i].s2 = stimulus[i].s2 || delivered[i].s2;
    }
  }

  // (4) ambient signal one from antigens no APC presented this tick
  for (std::size_t i = 0; i < repertoire_.size(); ++i) {
    const Detector& d = repertoire_[i];
    if (!d.alive() || stimulus[i].s1) continue;
    for (std::size_t j = 0; j < pool_.size(); ++j) {
      if (!co_presented[j] && matches(d.receptor, pool_[j].pattern, cfg_.r)) {
        stimulus[i].s1 = true;
        break;
      }
    }
  }

  // (5) lifecycle step
  std::vector<std::size_t> newly_activated;
  for (std::size_t i = 0; i < repertoire_.size(); ++i) {
    Detector& d = repertoire_[i];
    if (!d.alive()) continue;
    const DetectorState before = d.state;
    d = step_detector(d, stimulus[i].s1, stimulus[i].s2, false, cfg_.lifecycle);
    if (d.state == DetectorState::Dead && before != DetectorState::Immature) ++stats_.tolerized;
    if (d.state == DetectorState::Activated && before != DetectorState::Activated) {
      newly_activated.push_back(i);
    }
  }

  // Targets are fixed from the pool as it stood before any quarantine this tick.
  const std::vector<Antigen> pool_snapshot = pool_;
  auto targets_of = [&](const Detector& d) {
    std::vector<std::string> sources;
    for (const Antigen& a : pool_snapshot) {
      if (matches(d.receptor, a.pattern, cfg_.r) &&
          std::find(sources.begin(), sources.end(), a.source_id) == sources.end()) {
        sources.push_back(a.source_id);
      }
    }
    return sources;
  };

  // (6) confirmation and clonal expansion for new effectors
  std::vector<Detector> clones;
  for (std::size_t i : newly_activated) {
    Detector& d = repertoire_[i];
    out.activated.push_back(d.id);
    if (cfg_.sandbox) {
      for (const std::string& source : targets_of(d)) {
        if (confirm_in_sandbox(source)) {
          d.danger_confirmed = true;
          break;
        }
      }
    }
    const std::uint64_t clone_seed =
        derived_rng({cfg_.seed, tick_, d.id})();
    for (Detector& c : clone_and_mutate(d, cfg_.n_clones, cfg_.mutation_rate, clone_seed,
                                        cfg_.lifecycle.tau_act)) {
      c.id = next_id_++;
      clones.push_back(c);
    }
  }
  stats_.clones_created += clones.size();

  // (7) effector responses
  for (std::size_t i = 0; i < repertoire_.size(); ++i) {
    const Detector& d = repertoire_[i];
    if (d.state != DetectorState::Activated || !stimulus[i].s1) continue;
    for (const std::string& source : targets_of(d)) quarantine(source, d.id, out);
  }

  std::erase_if(repertoire_, [](const Detector& d) { return !d.alive(); });
  repertoire_.insert(repertoire_.end(), clones.begin(), clones.end());
  alarm_log_.insert(alarm_log_.end(), out.alarms.begin(), out.alarms.end());
  ++tick_;
  return out;
}

}  // namespace ais
