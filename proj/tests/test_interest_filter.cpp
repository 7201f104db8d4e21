#include <doctest.h>

#include <cmath>

#include "ais/errors.hpp"
#include "ais/harness.hpp"
#include "ais/interest_filter.hpp"
#include "ais/negative_selection.hpp"

using namespace ais;

namespace {

bool matches_any(const Detector& d, const std::vector<std::string>& words, int L, int r) {
  for (const auto& w : words) {
    if (matches(d.receptor, encode_token(w, L), r)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("token hash is 64-bit FNV-1a") {
  // Published FNV-1a test vectors.
  CHECK(encode_token("", 64).bits() == 0xcbf29ce484222325ULL);
  CHECK(encode_token("a", 64).bits() == 0xaf63dc4c8601ec8cULL);
  CHECK(encode_token("foobar", 64).bits() == 0x85944171f73967e8ULL);
  CHECK(encode_token("a", 8).bits() == 0x8c);
}

TEST_CASE("session log round trip and errors") {
  const std::string text =
      "#schema=ais-browse-v1\n"
      "0\td1\t1\tcat,dog\n"
      "1.5\td2\t0\tcar\n";
  const auto log = parse_session_log(text, 16);
  REQUIRE(log.size() == 2);
  CHECK(log[0].interest);
  CHECK(log[0].tokens == std::vector<std::string>{"cat", "dog"});
  CHECK(log[0].features.size() == 2);
  CHECK(serialize_session_log(log) == text);

  CHECK_THROWS_AS(parse_session_log(std::string_view("0\td\t1\t-\n"), 16), DataError);
  CHECK_THROWS_AS(parse_session_log(std::string_view("0\td\t2\tx\n"), 16), DataError);
  CHECK_THROWS_AS(parse_session_log(std::string_view("1\td\t1\tx\n0\te\t1\tx\n"), 16), DataError);
  CHECK_THROWS_AS(parse_session_log(std::string_view("0\td\t1\n"), 16), DataError);
  CHECK_THROWS_AS(parse_session_log(std::string_view("#schema=ais-browse-v9\n"), 16), DataError);
}

TEST_CASE("ranking auc") {
  CHECK(ranking_auc({{"a", true, 3}, {"b", false, 1}}) == 1.0);
  CHECK(ranking_auc({{"a", true, 1}, {"b", false, 1}}) == 0.5);
  CHECK(ranking_auc({{"a", true, 0}, {"b", false, 2}, {"c", true, 2}}) == 0.25);
  CHECK(std::isnan(ranking_auc({{"a", true, 0}})));
}

TEST_CASE("document score counts only effector and memory detectors") {
  LifecycleParams p;
  const auto rec = make_record(0, "d", true, {"w"}, 8);
  const Pattern f = *rec.features.begin();
  std::vector<Detector> reps{make_mature_detector(0, f, p), make_mature_detector(1, f, p),
                             make_mature_detector(2, f, p)};
  reps[1].state = DetectorState::Activated;
  reps[2].state = DetectorState::MemoryResting;
  CHECK(document_score(rec, reps, 8) == 2);
}

TEST_CASE("uninteresting features tolerize and interesting ones activate") {
  LifecycleParams p;
  p.tau_act = 2;
  p.decay = 0;
  const auto a = make_record(0, "a", true, {"alpha"}, 8);
  const auto b = make_record(1, "b", false, {"beta"}, 8);
  std::vector<Detector> reps{make_mature_detector(0, *a.features.begin(), p),
                             make_mature_detector(1, *b.features.begin(), p)};
  ReplayOptions opt;
  opt.influx_every = 0;
  const auto res = replay_session({a, b, a, b}, reps, 8, p, opt);
  CHECK(res.repertoire[0].state == DetectorState::Activated);
  CHECK(res.repertoire[1].state == DetectorState::Dead);
  CHECK(res.metrics.tolerization_deaths == 1);
  CHECK(res.metrics.activations == 1);
  CHECK(res.metrics.online_scores[2].score == 0);
}

TEST_CASE("alternating replay leaves only interest-matching survivors") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    ReplaySettings s;
    s.lifecycle.decay = 0;
    const auto rep = run_replay(s, seed);
    const auto demo = make_alternating_session(s.records, s.pattern_length, seed);
    std::size_t matching_a = 0;
    for (const auto& d : rep.result.repertoire) {
      if (!d.alive()) continue;
      REQUIRE_FALSE(matches_any(d, demo.topic_b, s.pattern_length, s.r));
      matching_a += matches_any(d, demo.topic_a, s.pattern_length, s.r);
    }
    CAPTURE(seed);
    CHECK(matching_a > 0);
    CHECK(rep.auc > 0.5);
  }
}

TEST_CASE("replay is deterministic") {
  ReplaySettings s;
  CHECK(format_replay_report(run_replay(s, 11)) == format_replay_report(run_replay(s, 11)));
}
