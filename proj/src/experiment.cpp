#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/harness.hpp"
#include "ais/negative_selection.hpp"

namespace ais {

double Report::fp_rate() const {
  const std::size_t negatives = fp + tn;
  return negatives == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(negatives);
}

double Report::fn_rate() const {
  const std::size_t positives = tp + fn;
  return positives == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(positives);
}

Scenario load_scenario(const RunConfig& cfg) {
  if (!cfg.events_path) return generate_scenario(cfg.scenario, cfg.scenario_seed);
  Scenario s;
  std::ifstream in(*cfg.events_path);
  if (!in) throw ConfigError(fmt::format("cannot read events '{}'", cfg.events_path->string()));
  s.events = parse_event_log(in);
  if (cfg.labels_path) {
    std::ifstream lin(*cfg.labels_path);
    if (!lin) throw ConfigError(fmt::format("cannot read labels '{}'", cfg.labels_path->string()));
    s.labels = parse_label_table(lin);
  }
  return s;
}

namespace {

std::uint64_t tick_of(double time, double tick_seconds) {
  return static_cast<std::uint64_t>(std::floor(time / tick_seconds + 1e-9));
}

std::vector<std::vector<HostEvent>> split_ticks(const std::vector<HostEvent>& events,
                                                double tick_seconds) {
  std::vector<std::vector<HostEvent>> ticks;
  for (const HostEvent& e : events) {
    const auto t = tick_of(e.time, tick_seconds);
    if (t >= ticks.size()) ticks.resize(t + 1);
    ticks[t].push_back(e);
  }
  return ticks;
}

CostimOracle make_oracle(OracleKind kind, const LabelTable& labels) {
  switch (kind) {
    case OracleKind::AlwaysYes: return always_yes_oracle();
    case OracleKind::AlwaysNo: return always_no_oracle();
    case OracleKind::GroundTruth: return ground_truth_oracle(labels);
  }
  return always_yes_oracle();
}

CensorResult train_baseline(const RunConfig& cfg,
                            const std::vector<std::vector<HostEvent>>& ticks) {
  SelfSet self(cfg.pattern_length);
  const auto window = static_cast<std::size_t>(cfg.lifecycle.maturation_ticks);
  for (std::size_t t = 0; t < ticks.size() && t < window; ++t) {
    for (const HostEvent& e : ticks[t]) {
      if (e.pattern && !e.engine_initiated) self.insert(*e.pattern);
    }
  }
  const auto candidates =
      generate_detectors(cfg.detectors, cfg.pattern_length, cfg.seed, cfg.lifecycle);
  return censor(candidates, self, cfg.r);
}

// Fills the confusion counts and latencies from first-response ticks.
void score(Report& rep, const Scenario& scenario,
           const std::vector<std::vector<HostEvent>>& ticks,
           const std::map<std::string, std::uint64_t>& first_response) {
  std::map<std::string, std::uint64_t> first_seen;
  for (std::size_t t = 0; t < ticks.size(); ++t) {
    for (const HostEvent& e : ticks[t]) {
      if (!e.engine_initiated) first_seen.emplace(e.source_id, t);
    }
  }
  rep.labeled_sources = scenario.labels.size();
  for (const auto& [source, label] : scenario.labels) {
    const bool flagged = first_response.count(source) != 0;
    if (label == Label::NonSelf) {
      flagged ? ++rep.tp : ++rep.fn;
    } else {
      flagged ? ++rep.fp : ++rep.tn;
    }
  }
  for (const auto& [source, tick] : first_response) {
    if (!scenario.labels.count(source)) ++rep.unlabeled_flagged;
  }

  std::optional<std::uint64_t> first_attack;
  std::optional<std::uint64_t> first_correct;
  double latency_sum = 0.0;
  std::size_t latency_n = 0;
  for (const auto& [source, label] : scenario.labels) {
    if (label != Label::NonSelf) continue;
    auto seen = first_seen.find(source);
    if (seen == first_seen.end()) continue;
    if (!first_attack || seen->second < *first_attack) first_attack = seen->second;
    auto resp = first_response.find(source);
    if (resp == first_response.end()) continue;
    if (!first_correct || resp->second < *first_correct) first_correct = resp->second;
    latency_sum += static_cast<double>(resp->second - std::min(resp->second, seen->second));
    ++latency_n;
  }
  if (first_attack && first_correct) {
    rep.detection_latency = *first_correct - std::min(*first_correct, *first_attack);
  }
  if (latency_n > 0) rep.mean_source_latency = latency_sum / static_cast<double>(latency_n);
}

Report run_baseline(const RunConfig& cfg, const Scenario& scenario,
                    const std::vector<std::vector<HostEvent>>& ticks) {
  Report rep;
  rep.mode = std::string(to_string(Mode::NsOnly));
  rep.ticks = ticks.size();
  rep.detector_budget = cfg.detectors;
  CensorResult trained = train_baseline(cfg, ticks);
  rep.mature_detectors = trained.survivors.size();
  NsMonitor monitor(std::move(trained.survivors), cfg.r, make_oracle(cfg.oracle, scenario.labels));

  SourceRegistry registry;
  std::set<std::string> quarantined;
  std::map<std::string, std::uint64_t> first_response;
  const auto window = static_cast<std::size_t>(cfg.lifecycle.maturation_ticks);
  for (std::size_t t = 0; t < ticks.size(); ++t) {
    for (const HostEvent& e : ticks[t]) {
      if (e.engine_initiated) {
        ++rep.engine_events_seen;
        continue;
      }
      if (quarantined.count(e.source_id)) continue;
      registry.observe(e);
      if (t < window || !e.pattern) continue;
      const auto* src = registry.find(e.source_id);
      Antigen a;
      a.pattern = *e.pattern;
      a.source_id = e.source_id;
      a.start_time = src->first_seen;
      a.active_from = e.time;
      a.active_to = e.time;
      a.resources = src->resources;
      for (const NsAlarm& alarm : monitor.present(a)) {
        ++rep.alarms;
        rep.trace.push_back({t, "ALARM", "NS_MATCH", e.source_id, alarm.detector_id});
        if (!alarm.confirmed) continue;
        for (const Antigen& m : alarm.matched) {
          if (!first_response.emplace(m.source_id, t).second) continue;
          ++rep.responses;
          quarantined.insert(m.source_id);
          rep.trace.push_back({t, "RESPONSE", "QUARANTINE", m.source_id, alarm.detector_id});
        }
      }
    }
  }
  rep.operator_calls = monitor.operator_calls();
  score(rep, scenario, ticks, first_response);
  return rep;
}

Report run_engine(const RunConfig& cfg, const Scenario& scenario,
                  const std::vector<std::vector<HostEvent>>& ticks) {
  Report rep;
  rep.mode = std::string(to_string(cfg.mode));
  rep.ticks = ticks.size();
  rep.detector_budget = cfg.detectors;

  std::unique_ptr<NsMonitor> monitor;
  std::vector<Detector> repertoire;
  if (cfg.mode == Mode::Hybrid) {
    CensorResult trained = train_baseline(cfg, ticks);
    rep.mature_detectors = trained.survivors.size();
    monitor = std::make_unique<NsMonitor>(trained.survivors, cfg.r, always_yes_oracle());
    repertoire = std::move(trained.survivors);
  } else {
    repertoire = generate_detectors(cfg.detectors, cfg.pattern_length, cfg.seed, cfg.lifecycle);
  }

  DangerEngine engine(cfg.engine_config(), std::move(repertoire));
  if (monitor) engine.attach_nonself_monitor(std::move(monitor));
  std::map<std::string, std::uint64_t> first_response;
  for (std::size_t t = 0; t < ticks.size(); ++t) {
    TickResult res = engine.tick(ticks[t]);
    for (const Response& r : res.responses) first_response.emplace(r.source_id, r.tick);
    rep.responses += res.responses.size();
    rep.alarms += res.alarms.size();
    if (cfg.mode == Mode::Danger && t + 1 == static_cast<std::size_t>(cfg.lifecycle.maturation_ticks)) {
      for (const Detector& d : engine.repertoire()) {
        if (d.state != DetectorState::Immature) ++rep.mature_detectors;
      }
    }
  }
  for (const DangerAlarm& a : engine.alarm_log()) {
    if (a.trigger.engine_initiated) ++rep.feedback_alarms;
  }
  rep.clones_created = engine.stats().clones_created;
  rep.engine_events_seen = engine.stats().engine_events_seen;
  rep.trace = engine.audit();
  score(rep, scenario, ticks, first_response);
  return rep;
}

std::string opt_text(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : std::string("none");
}

std::string opt_text(const std::optional<double>& v) {
  return v ? fmt::format("{:.3f}", *v) : std::string("none");
}

}  // namespace

Report run_experiment(const RunConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, load_scenario(cfg));
}

Report run_experiment(const RunConfig& cfg, const Scenario& scenario) {
  cfg.validate();
  for (const HostEvent& e : scenario.events) {
    if (e.pattern && e.pattern->length() != cfg.pattern_length) {
      throw ConfigError(fmt::format("event pattern length {} does not match L={}",
                                    e.pattern->length(), cfg.pattern_length));
    }
  }
  const auto ticks = split_ticks(scenario.events, cfg.tick_seconds);
  if (cfg.mode == Mode::NsOnly) return run_baseline(cfg, scenario, ticks);
  return run_engine(cfg, scenario, ticks);
}

std::string format_report(const Report& r) {
  std::string out;
  auto line = [&](std::string_view k, const auto& v) { out += fmt::format("{}: {}\n", k, v); };
  line("mode", r.mode);
  line("ticks", r.ticks);
  line("labeled_sources", r.labeled_sources);
  line("true_positives", r.tp);
  line("false_positives", r.fp);
  line("false_negatives", r.fn);
  line("true_negatives", r.tn);
  line("unlabeled_flagged", r.unlabeled_flagged);
  line("fp_rate", fmt::format("{:.4f}", r.fp_rate()));
  line("fn_rate", fmt::format("{:.4f}", r.fn_rate()));
  line("detection_latency_ticks", opt_text(r.detection_latency));
  line("mean_source_latency_ticks", opt_text(r.mean_source_latency));
  line("detector_budget", r.detector_budget);
  line("mature_detectors", r.mature_detectors);
  line("clones_created", r.clones_created);
  line("operator_calls", r.operator_calls);
  line("alarms", r.alarms);
  line("responses", r.responses);
  line("engine_events_seen", r.engine_events_seen);
  line("feedback_alarms", r.feedback_alarms);
  return out;
}

Comparison compare_modes(const RunConfig& a, const RunConfig& b) {
  a.validate();
  b.validate();
  const bool same = a.events_path == b.events_path && a.labels_path == b.labels_path &&
                    a.scenario_seed == b.scenario_seed && a.seed == b.seed &&
                    a.detectors == b.detectors && a.pattern_length == b.pattern_length &&
                    format_scenario_spec(a.scenario) == format_scenario_spec(b.scenario);
  if (!same) {
    throw ConfigError("compare: runs must share scenario, seeds and detector budget");
  }
  const Scenario scenario = load_scenario(a);
  Comparison c;
  c.a = run_experiment(a, scenario);
  c.b = run_experiment(b, scenario);
  c.delta_fp_rate = c.b.fp_rate() - c.a.fp_rate();
  c.delta_fn_rate = c.b.fn_rate() - c.a.fn_rate();
  if (c.a.detection_latency && c.b.detection_latency) {
    c.delta_latency = static_cast<double>(*c.b.detection_latency) -
                      static_cast<double>(*c.a.detection_latency);
  }
  c.delta_operator_calls = static_cast<long long>(c.b.operator_calls) -
                           static_cast<long long>(c.a.operator_calls);
  c.delta_fp = static_cast<long long>(c.b.fp) - static_cast<long long>(c.a.fp);
  c.delta_tp = static_cast<long long>(c.b.tp) - static_cast<long long>(c.a.tp);
  return c;
}

std::string format_comparison(const Comparison& c) {
  std::string out;
  out += fmt::format("a.mode: {}\nb.mode: {}\n", c.a.mode, c.b.mode);
  out += fmt::format("a.fp_rate: {:.4f}\nb.fp_rate: {:.4f}\n", c.a.fp_rate(), c.b.fp_rate());
  out += fmt::format("a.fn_rate: {:.4f}\nb.fn_rate: {:.4f}\n", c.a.fn_rate(), c.b.fn_rate());
  out += fmt::format("a.true_positives: {}\nb.true_positives: {}\n", c.a.tp, c.b.tp);
  out += fmt::format("a.false_positives: {}\nb.false_positives: {}\n", c.a.fp, c.b.fp);
  out += fmt::format("a.detection_latency_ticks: {}\nb.detection_latency_ticks: {}\n",
                     opt_text(c.a.detection_latency), opt_text(c.b.detection_latency));
  out += fmt::format("a.operator_calls: {}\nb.operator_calls: {}\n", c.a.operator_calls,
                     c.b.operator_calls);
  out += fmt::format("delta_fp_rate: {:+.4f}\n", c.delta_fp_rate);
  out += fmt::format("delta_fn_rate: {:+.4f}\n", c.delta_fn_rate);
  out += fmt::format("delta_latency_ticks: {}\n",
                     c.delta_latency ? fmt::format("{:+.0f}", *c.delta_latency) : "none");
  out += fmt::format("delta_operator_calls: {:+d}\n", c.delta_operator_calls);
  return out;
}

}  // namespace ais
