// Acceptance suite. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ais/harness.hpp"
#include "ais/negative_selection.hpp"
#include "support/oracles.hpp"
#include "support/scenarios.hpp"

namespace fs = std::filesystem;
using namespace ais;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Records the first failure; later checks still run so details stay useful.
struct Check {
  Outcome out;
  void operator()(bool cond, const std::string& what) {
    if (!cond && out.ok) {
      out.ok = false;
      out.detail = what;
    }
  }
};

Outcome lifecycle_table() {
  Check check;
  const auto params = oracle::table_params();
  const auto table = oracle::lifecycle_table();
  check(table.size() == 20, "table must hold 20 cases");
  for (const auto& c : table) {
    const Detector next = step_detector(oracle::detector_for(c), c.s1, c.s2, c.confirmed, params);
    check(next.state == c.expect_state, fmt::format("state mismatch in '{}'", c.name));
    if (next.state == DetectorState::Dead) continue;
    check(next.stimulation_count == c.expect_stimulation, fmt::format("stimulation in '{}'", c.name));
    check(next.effector_ticks_remaining == c.expect_effector, fmt::format("effector in '{}'", c.name));
    check(next.activation_threshold == c.expect_threshold, fmt::format("threshold in '{}'", c.name));
  }
  check.out.detail = check.out.ok ? fmt::format("{} cases", table.size()) : check.out.detail;
  return check.out;
}

Outcome censoring_oracle() {
  Check check;
  std::mt19937_64 gen(2024);
  const int L = 8;
  std::size_t survivors = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int r = trial % 2 ? 5 : 3;
    SelfSet self(L);
    const std::size_t want = gen() % 65;
    while (self.size() < want) self.insert(Pattern(gen(), L));
    const auto res = censor(generate_detectors(256, L, gen()), self, r);
    survivors += res.survivors.size();
    for (const auto& d : res.survivors) {
      for (const auto& s : self.patterns()) {
        check(!oracle::matches(d.receptor.to_string(), s.to_string(), r),
              fmt::format("trial {}: survivor {} matches self", trial, d.id));
      }
    }
    std::set<Pattern> expect;
    for (std::uint64_t x = 0; x < (1u << L); ++x) {
      if (self.contains(Pattern(x, L))) continue;
      const std::string xs = oracle::bits_of(x, L);
      for (const auto& d : res.survivors) {
        if (oracle::matches(d.receptor.to_string(), xs, r)) {
          expect.insert(Pattern(x, L));
          break;
        }
      }
    }
    check(detectable_nonself(res.survivors, self, r) == expect,
          fmt::format("trial {}: detectable non-self differs from enumeration", trial));
  }
  if (check.out.ok) check.out.detail = fmt::format("100 trials, {} survivors checked", survivors);
  return check.out;
}

Outcome tolerization_trace() {
  Check check;
  const auto ticks = fixture::tolerance_ticks();
  const auto cfg = fixture::tolerance_config();
  DangerEngine engine(cfg, fixture::tolerance_repertoire(cfg.lifecycle));
  const std::uint64_t last_self_alarm = 0;
  const std::uint64_t quarantine_tick = 32;
  for (std::uint64_t t = 0; t < ticks.size(); ++t) {
    engine.tick(ticks[t]);
    for (std::uint64_t id : {0u, 1u, 2u}) {
      const bool alive = engine.find_detector(id) != nullptr;
      check(alive == (t < last_self_alarm + cfg.lifecycle.tolerization_ticks),
            fmt::format("self detector {} alive={} at tick {}", id, alive, t));
    }
    for (std::uint64_t id : {3u, 4u}) {
      const Detector* d = engine.find_detector(id);
      check(d != nullptr, fmt::format("attack detector {} gone at tick {}", id, t));
      if (!d) continue;
      if (t < quarantine_tick) {
        check(d->state == DetectorState::MatureResting,
              fmt::format("attack detector {} left rest early at tick {}", id, t));
      }
    }
    const Detector* neutral = engine.find_detector(5);
    check(neutral && neutral->state == DetectorState::MatureResting,
          fmt::format("neutral detector disturbed at tick {}", t));
  }
  const std::vector<AuditRecord> expect{
      {0, "ALARM", "MEMORY_BAND", "svc-self", std::nullopt},
      {30, "ALARM", "ABNORMAL_TERMINATION", "intruder", std::nullopt},
      {31, "ALARM", "ABNORMAL_TERMINATION", "intruder", std::nullopt},
      {32, "ALARM", "ABNORMAL_TERMINATION", "intruder", std::nullopt},
      {32, "RESPONSE", "QUARANTINE", "intruder", 3},
  };
  check(engine.audit() == expect, "audit trace differs from the expected trace");
  check(engine.quarantined() == std::set<std::string>{"intruder"}, "wrong quarantine set");
  if (check.out.ok) check.out.detail = "self detectors dead at tick 1, quarantine at tick 32";
  return check.out;
}

Outcome zone_soundness() {
  Check check;
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  auto resources = [&] {
    std::set<std::string> r;
    for (int k = 0; k < 6; ++k) {
      if (gen() % 3 == 0) r.insert(fmt::format("res{}", k));
    }
    return r;
  };
  std::size_t presented = 0, pooled = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    ZoneConfig cfg;
    double w[3] = {u(gen), u(gen), u(gen)};
    const double sum = w[0] + w[1] + w[2] + 1e-9;
    cfg.w_time = w[0] / sum;
    cfg.w_overlap = w[1] / sum;
    cfg.w_resource = 1.0 - cfg.w_time - cfg.w_overlap;
    cfg.tau_s = 1.0 + u(gen);
    cfg.theta = std::uniform_real_distribution<double>(0.0, 1.0)(gen);

    DangerAlarm alarm;
    alarm.emitter_id = fmt::format("src{}", gen() % 5);
    alarm.emitter_start = u(gen);
    alarm.time = alarm.emitter_start + u(gen);
    alarm.emitter_resources = resources();

    std::vector<Antigen> pool(gen() % 25);
    for (auto& a : pool) {
      a.pattern = Pattern(gen(), 16);
      a.source_id = fmt::format("src{}", gen() % 8);
      a.start_time = u(gen);
      a.active_from = a.start_time + u(gen) / 4;
      a.active_to = a.active_from + (gen() % 2 ? u(gen) : 0.0);
      a.resources = resources();
    }
    pooled += pool.size();

    std::vector<std::string> expect;
    for (const auto& a : pool) {
      const double p = oracle::proximity({a.start_time, a.active_from, a.active_to, a.resources,
                                          alarm.emitter_start, alarm.time, alarm.emitter_resources,
                                          cfg.w_time, cfg.w_overlap, cfg.w_resource, cfg.tau_s});
      const double got = proximity(a, alarm, cfg);
      check(got >= 0.0 && got <= 1.0, fmt::format("instance {}: proximity {} outside [0,1]", inst, got));
      check(std::fabs(got - p) < 1e-12, fmt::format("instance {}: proximity {} vs oracle {}", inst, got, p));
      if (a.source_id == alarm.emitter_id || p >= cfg.theta) {
        expect.push_back(a.source_id + "/" + a.pattern.to_string());
      }
    }
    std::vector<std::string> got;
    for (const auto& a : build_danger_zone(alarm, pool, cfg).presented) {
      got.push_back(a.source_id + "/" + a.pattern.to_string());
    }
    presented += got.size();
    check(got == expect, fmt::format("instance {}: zone membership differs", inst));
  }
  if (check.out.ok) {
    check.out.detail = fmt::format("1000 instances, {} of {} antigens presented", presented, pooled);
  }
  return check.out;
}

std::optional<Comparison> g_comparison;
double g_comparison_seconds = 0.0;

const Comparison& full_comparison() {
  if (!g_comparison) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig a;
    a.mode = Mode::NsOnly;
    RunConfig b;
    b.mode = Mode::Danger;
    g_comparison = compare_modes(a, b);
    g_comparison_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return *g_comparison;
}

Outcome no_feedback() {
  Check check;
  const Comparison& c = full_comparison();
  for (const Report* r : {&c.a, &c.b}) {
    check(r->feedback_alarms == 0,
          fmt::format("{}: {} alarms traced to engine-initiated events", r->mode, r->feedback_alarms));
  }
  // The danger run must actually see its own kills for this to mean anything.
  check(c.b.engine_events_seen > 0, "no engine-initiated events reached the danger run");
  if (check.out.ok) {
    check.out.detail = fmt::format("0 feedback alarms; {} engine-initiated events seen by DANGER",
                                   c.b.engine_events_seen);
  }
  return check.out;
}

Outcome mode_comparison() {
  Check check;
  const Comparison& c = full_comparison();
  const Report& ns = c.a;
  const Report& dg = c.b;
  check(ns.detector_budget == dg.detector_budget, "detector budgets differ");
  check(dg.fp <= ns.fp, fmt::format("DANGER FP {} > NS_ONLY FP {}", dg.fp, ns.fp));
  check(dg.tp >= 8, fmt::format("DANGER TP {} < 8", dg.tp));
  check(dg.operator_calls == 0, fmt::format("DANGER made {} operator calls", dg.operator_calls));
  check(ns.operator_calls > 0, "NS_ONLY made no operator calls");
  check(g_comparison_seconds < 60.0, "comparison exceeded 60 s");
  if (check.out.ok) {
    check.out.detail = fmt::format("FP {} vs {}, TP {} vs {}, operator calls {} vs {}", dg.fp, ns.fp,
                                   dg.tp, ns.tp, dg.operator_calls, ns.operator_calls);
  }
  return check.out;
}

Outcome scaling() {
  Check check;
  const RunConfig cfg;
  const ScalingTable t = scaling_probe(cfg.scale, cfg.seed);
  check(t.pattern_length == 12 && t.r == 6, "probe not at L=12, r=6");
  check(t.rows.size() == 3, "expected three self sizes");
  check(t.nondecreasing, "detector count decreased with self size");
  std::string cells;
  for (const auto& row : t.rows) {
    cells += fmt::format("{}{}:{}", cells.empty() ? "" : ", ", row.self_size,
                         row.candidates_needed ? std::to_string(*row.candidates_needed)
                                               : std::string("saturated"));
  }
  if (check.out.ok) check.out.detail = cells;
  return check.out;
}

Outcome topology() {
  Check check;
  const RunConfig cfg;
  const TopologyScenario sc = canonical_topology_scenario(cfg.seed);
  // Expected responses per class: self, harmless, dangerous.
  const std::map<Topology, std::array<std::size_t, 3>> expect{
      {Topology::Burnet, {3, 2, 2}},           {Topology::TwoSignal, {0, 2, 2}},
      {Topology::ThreeParty, {0, 2, 2}},       {Topology::InfectiousNonself, {0, 2, 2}},
      {Topology::Danger, {0, 0, 2}},           {Topology::DangerExtended, {0, 1, 2}},
  };
  for (const auto& [t, e] : expect) {
    const SignalOutcome o = simulate_signal_model(t, sc);
    const std::array<std::size_t, 3> got{o.responses_self, o.responses_harmless, o.responses_dangerous};
    check(got == e, fmt::format("{}: responses {}/{}/{}, expected {}/{}/{}", to_string(t), got[0],
                                got[1], got[2], e[0], e[1], e[2]));
  }
  if (check.out.ok) {
    check.out.detail = "DANGER 0 harmless, INFECTIOUS_NONSELF 2 PAMP-flagged, BURNET 3 self";
  }
  return check.out;
}

Outcome interest_filter() {
  Check check;
  const RunConfig cfg;
  const ReplayReport rep = run_replay(cfg.replay, cfg.seed);
  const auto demo = make_alternating_session(cfg.replay.records, cfg.replay.pattern_length, cfg.seed);
  const int L = cfg.replay.pattern_length;
  const int r = cfg.replay.r;
  auto hits = [&](const Detector& d, const std::vector<std::string>& words) {
    for (const auto& w : words) {
      if (matches(d.receptor, encode_token(w, L), r)) return true;
    }
    return false;
  };
  std::size_t alive = 0, on_a = 0;
  for (const auto& d : rep.result.repertoire) {
    if (!d.alive()) continue;
    ++alive;
    check(!hits(d, demo.topic_b), fmt::format("survivor {} matches an uninteresting feature", d.id));
    on_a += hits(d, demo.topic_a);
  }
  check(on_a > 0, "no survivor matches an interesting feature");
  check(rep.auc > 0.5, fmt::format("held-out AUC {:.4f} <= 0.5", rep.auc));
  if (check.out.ok) {
    check.out.detail = fmt::format("{} survivors, {} on A features, 0 on B, AUC {:.4f}", alive, on_a,
                                   rep.auc);
  }
  return check.out;
}

int aisim(const std::string& args) {
  const std::string cmd = std::string(AISIM_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[fs::relative(entry.path(), dir).string()] = ss.str();
  }
  return files;
}

Outcome determinism() {
  Check check;
  const fs::path root = fs::temp_directory_path() / "aisim-acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"run", "run"},
      {"run-hybrid", "run --mode HYBRID"},
      {"compare", "compare"},
      {"scale", "scale"},
      {"topo", "topo --dump-scenario"},
      {"gen", "gen"},
      {"replay", "replay"},
  };
  std::size_t files = 0;
  for (const auto& [name, cmd] : commands) {
    std::vector<std::map<std::string, std::string>> runs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / fmt::format("{}-{}", name, rep);
      const int rc = aisim(fmt::format("{} --seed 7 --out {}", cmd, out.string()));
      check(rc == 0, fmt::format("'{}' exited with {}", cmd, rc));
      runs.push_back(snapshot(out));
    }
    check(!runs[0].empty(), fmt::format("'{}' wrote no files", cmd));
    for (int rep = 1; rep < 2; ++rep) {
      check(runs[rep] == runs[0], fmt::format("'{}' output differs between runs", cmd));
    }
    files += runs[0].size();
  }
  fs::remove_all(root);
  if (check.out.ok) {
    check.out.detail = fmt::format("{} subcommands run twice, {} files byte-identical", commands.size(), files);
  }
  return check.out;
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0 means no bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "lifecycle table", 1.0, lifecycle_table},
      {2, "censoring soundness and coverage", 10.0, censoring_oracle},
      {3, "tolerization trace", 1.0, tolerization_trace},
      {4, "zone soundness", 5.0, zone_soundness},
      {5, "no danger feedback", 0.0, no_feedback},
      {6, "mode comparison", 60.0, mode_comparison},
      {7, "scaling probe", 120.0, scaling},
      {8, "topology discrimination", 5.0, topology},
      {9, "interest filter", 5.0, interest_filter},
      {10, "cli determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.id == 6) secs = std::max(secs, g_comparison_seconds);
    if (c.limit_seconds > 0 && secs > c.limit_seconds && out.ok) {
      out = {false, fmt::format("took {:.2f} s, limit {:.0f} s", secs, c.limit_seconds)};
    }
    if (!out.ok) ++failures;
    std::cout << fmt::format("{} [{}] {} ({:.2f} s): {}\n", out.ok ? "PASS" : "FAIL", c.id, c.name,
                             secs, out.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures;
}
