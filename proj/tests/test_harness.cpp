#include <doctest.h>

#include <cmath>

#include "ais/errors.hpp"
#include "ais/harness.hpp"
#include "ais/negative_selection.hpp"

using namespace ais;

namespace {

RunConfig small_config(Mode mode) {
  RunConfig cfg = parse_run_config(
      "detectors=300\n"
      "scenario.duration_ticks=150\n"
      "scenario.n_self_sources=20\n"
      "scenario.n_attack_sources=4\n");
  cfg.mode = mode;
  return cfg;
}

void check_accounting(const Report& r) {
  CHECK(r.tp + r.fp + r.fn + r.tn == r.labeled_sources);
  CHECK(r.feedback_alarms == 0);
  CHECK(r.fp_rate() >= 0.0);
  CHECK(r.fp_rate() <= 1.0);
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_run_config(
      "# comment\n"
      "mode = NS_ONLY\n"
      "L=16\nr=8\n"
      "tau_act=2\n"
      "zone.theta=0.4\n"
      "oracle=always_no\n"
      "scale.self_sizes=4,8\n"
      "replay.records=20\n"
      "scenario.pattern_length=16\n");
  CHECK(cfg.mode == Mode::NsOnly);
  CHECK(cfg.pattern_length == 16);
  CHECK(cfg.r == 8);
  CHECK(cfg.lifecycle.tau_act == 2);
  CHECK(cfg.zone.theta == 0.4);
  CHECK(cfg.oracle == OracleKind::AlwaysNo);
  CHECK(cfg.scale.self_sizes == std::vector<std::size_t>{4, 8});
  CHECK(cfg.replay.records == 20);
  CHECK(cfg.scenario.pattern_length == 16);
  CHECK_NOTHROW(cfg.validate());

  const RunConfig again = parse_run_config(format_run_config(cfg));
  CHECK(format_run_config(again) == format_run_config(cfg));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_run_config("bogus=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("r=3\nr=4\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("mode=FAST\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("r=abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("r=40\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_run_config("events=/nonexistent/file.log\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_run_config("scale.L=20\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_run_config("topology=BURNET\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_run_config("L=16\nr=8\n").validate(), ConfigError);
}

TEST_CASE("every mode accounts for every labeled source") {
  for (Mode m : {Mode::NsOnly, Mode::Danger, Mode::Hybrid}) {
    CAPTURE(to_string(m));
    const Report r = run_experiment(small_config(m));
    CHECK(r.labeled_sources == 24);
    CHECK(r.detector_budget == 300);
    check_accounting(r);
    if (m == Mode::Danger) CHECK(r.operator_calls == 0);
  }
}

TEST_CASE("attack-free run with a rejecting operator flags nothing") {
  RunConfig cfg = small_config(Mode::NsOnly);
  cfg.scenario.n_attack_sources = 0;
  cfg.oracle = OracleKind::AlwaysNo;
  const Report r = run_experiment(cfg);
  CHECK(r.tp == 0);
  CHECK(r.fn == 0);
  CHECK(r.fp == 0);
  CHECK(r.tn == r.labeled_sources);
  CHECK(r.responses == 0);
  CHECK_FALSE(r.detection_latency);
  CHECK(format_report(r).find("detection_latency_ticks: none") != std::string::npos);
}

TEST_CASE("comparing a config with itself gives zero deltas") {
  const RunConfig cfg = small_config(Mode::Danger);
  const Comparison c = compare_modes(cfg, cfg);
  CHECK(c.delta_fp == 0);
  CHECK(c.delta_tp == 0);
  CHECK(c.delta_fp_rate == 0.0);
  CHECK(c.delta_fn_rate == 0.0);
  CHECK(c.delta_operator_calls == 0);
  CHECK(format_report(c.a) == format_report(c.b));
}

TEST_CASE("comparison refuses mismatched runs") {
  RunConfig a = small_config(Mode::NsOnly);
  RunConfig b = small_config(Mode::Danger);
  b.detectors = 301;
  CHECK_THROWS_AS(compare_modes(a, b), ConfigError);
  b = small_config(Mode::Danger);
  b.scenario_seed = 43;
  CHECK_THROWS_AS(compare_modes(a, b), ConfigError);
}

TEST_CASE("scaling probe edge cases") {
  ScaleSettings s;
  s.pattern_length = 8;
  s.r = 4;
  s.self_sizes = {0, 256};
  const ScalingTable t = scaling_probe(s, 3);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].nonself_size == 256);
  REQUIRE(t.rows[0].candidates_needed);
  CHECK(t.rows[0].coverage >= 0.95);
  CHECK(t.rows[0].coverage_ceiling == 1.0);
  // Nothing left to cover once self is the whole space.
  CHECK(t.rows[1].nonself_size == 0);
  CHECK(t.rows[1].saturated);
  CHECK(t.nondecreasing);

  s.pattern_length = 15;
  CHECK_THROWS_AS(scaling_probe(s, 1), ConfigError);
}

TEST_CASE("scaling probe coverage is what it claims") {
  ScaleSettings s;
  s.pattern_length = 8;
  s.r = 4;
  s.self_sizes = {4, 16, 48};
  const ScalingTable t = scaling_probe(s, 5);
  CHECK(t.nondecreasing);
  for (const auto& row : t.rows) {
    CHECK(row.nonself_size == 256 - row.self_size);
    CHECK(row.coverage <= row.coverage_ceiling + 1e-12);
    if (row.candidates_needed) CHECK(row.coverage >= 0.95);
  }
  CHECK(format_scaling_table(t) == format_scaling_table(scaling_probe(s, 5)));
}

TEST_CASE("topologies order the canonical scenario as expected") {
  const TopologyScenario sc = canonical_topology_scenario(1);
  auto run = [&](Topology t) { return simulate_signal_model(t, sc); };
  const auto burnet = run(Topology::Burnet);
  CHECK(burnet.responses_self > 0);
  const auto infectious = run(Topology::InfectiousNonself);
  CHECK(infectious.responses_self == 0);
  CHECK(infectious.responses_harmless > 0);
  const auto danger = run(Topology::Danger);
  CHECK(danger.responses_self == 0);
  CHECK(danger.responses_harmless == 0);
  CHECK(danger.responses_dangerous > 0);
  for (Topology t : {Topology::TwoSignal, Topology::ThreeParty, Topology::DangerExtended}) {
    CHECK(run(t).responses_self == 0);
  }
}

TEST_CASE("topology scenario text round trip") {
  const TopologyScenario sc = canonical_topology_scenario(2);
  const std::string text = serialize_topology_scenario(sc);
  const TopologyScenario back = parse_topology_scenario(text);
  CHECK(serialize_topology_scenario(back) == text);
  for (Topology t : kAllTopologies) {
    const auto x = simulate_signal_model(t, sc);
    const auto y = simulate_signal_model(t, back);
    CHECK(x.responses_self == y.responses_self);
    CHECK(x.responses_harmless == y.responses_harmless);
    CHECK(x.responses_dangerous == y.responses_dangerous);
  }
}

TEST_CASE("topologies reject scenarios missing their annotations") {
  TopologyScenario sc = canonical_topology_scenario(1);
  sc.helpers.reset();
  CHECK_THROWS_AS(simulate_signal_model(Topology::TwoSignal, sc), DataError);
  CHECK_THROWS_AS(simulate_signal_model(Topology::ThreeParty, sc), DataError);
  CHECK_NOTHROW(simulate_signal_model(Topology::Burnet, sc));

  sc = canonical_topology_scenario(1);
  sc.antigens[0].pamp.reset();
  CHECK_THROWS_AS(simulate_signal_model(Topology::InfectiousNonself, sc), DataError);

  sc = canonical_topology_scenario(1);
  sc.antigens.back().damaging.reset();
  CHECK_THROWS_AS(simulate_signal_model(Topology::Danger, sc), DataError);

  sc = canonical_topology_scenario(1);
  sc.antigens.back().apc_group.reset();
  CHECK_THROWS_AS(simulate_signal_model(Topology::DangerExtended, sc), DataError);

  CHECK_THROWS_AS(parse_topology_scenario("#schema=ais-topo-v1\nantigen\tx\n"), DataError);
}

TEST_CASE("experiment runs are deterministic") {
  const RunConfig cfg = small_config(Mode::Hybrid);
  const Report a = run_experiment(cfg);
  const Report b = run_experiment(cfg);
  CHECK(format_report(a) == format_report(b));
  CHECK(a.trace == b.trace);
}
