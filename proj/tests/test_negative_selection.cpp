#include <doctest.h>

#include <random>

#include "ais/errors.hpp"
#include "ais/negative_selection.hpp"
#include "support/oracles.hpp"

using namespace ais;

namespace {

Antigen antigen(const std::string& bits, const std::string& source, double t = 0.0) {
  Antigen a;
  a.pattern = Pattern::parse(bits);
  a.source_id = source;
  a.active_from = a.active_to = t;
  return a;
}

}  // namespace

TEST_CASE("generation is prefix stable and seeded") {
  const auto big = generate_detectors(100, 16, 42);
  const auto small = generate_detectors(10, 16, 42);
  for (std::size_t i = 0; i < small.size(); ++i) {
    CHECK(small[i].receptor == big[i].receptor);
    CHECK(small[i].id == i);
    CHECK(small[i].state == DetectorState::Immature);
  }
  const auto other = generate_detectors(10, 16, 43);
  int same = 0;
  for (std::size_t i = 0; i < 10; ++i) same += other[i].receptor == small[i].receptor;
  CHECK(same < 10);
}

TEST_CASE("censoring with an empty self set keeps everyone") {
  const auto cands = generate_detectors(20, 8, 1);
  const auto res = censor(cands, SelfSet(8), 3);
  CHECK(res.survivors.size() == 20);
  CHECK(res.eliminated.empty());
  for (const auto& d : res.survivors) CHECK(d.state == DetectorState::MatureResting);
}

TEST_CASE("censoring eliminates exactly the self-reactive candidates") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = 8;
    const int r = trial % 2 ? 3 : 5;
    SelfSet self(L);
    const auto n_self = gen() % 65;
    for (std::size_t i = 0; i < n_self; ++i) self.insert(Pattern(gen(), L));
    const auto cands = generate_detectors(200, L, gen());
    const auto res = censor(cands, self, r);
    CHECK(res.survivors.size() + res.eliminated.size() == cands.size());
    for (const auto& d : res.survivors) {
      for (const auto& s : self.patterns()) {
        REQUIRE_FALSE(oracle::matches(d.receptor.to_string(), s.to_string(), r));
      }
    }
    for (const auto& d : res.eliminated) {
      bool hit = false;
      for (const auto& s : self.patterns()) hit = hit || oracle::matches(d.receptor.to_string(), s.to_string(), r);
      REQUIRE(hit);
      REQUIRE(d.state == DetectorState::Dead);
    }
  }
}

TEST_CASE("censoring needs immature candidates") {
  auto cands = generate_detectors(3, 8, 1);
  cands[1].state = DetectorState::MatureResting;
  CHECK_THROWS_AS(censor(cands, SelfSet(8), 3), ContractViolation);
}

TEST_CASE("self set rejects mixed lengths") {
  SelfSet s(8);
  s.insert(Pattern(1, 8));
  s.insert(Pattern(1, 8));
  CHECK(s.size() == 1);
  CHECK_THROWS_AS(s.insert(Pattern(1, 9)), ConfigError);
}

TEST_CASE("detectable non-self matches brute force") {
  std::mt19937_64 gen(21);
  const int L = 6;
  SelfSet self(L);
  for (int i = 0; i < 10; ++i) self.insert(Pattern(gen(), L));
  const auto reps = censor(generate_detectors(30, L, 5), self, 3).survivors;
  const auto got = detectable_nonself(reps, self, 3);
  std::set<Pattern> expect;
  for (std::uint64_t x = 0; x < 64; ++x) {
    const std::string xs = oracle::bits_of(x, L);
    if (self.contains(Pattern(x, L))) continue;
    for (const auto& d : reps) {
      if (oracle::matches(d.receptor.to_string(), xs, 3)) {
        expect.insert(Pattern(x, L));
        break;
      }
    }
  }
  CHECK(got == expect);
  CHECK_THROWS_AS(detectable_nonself(reps, SelfSet(20), 3), ConfigError);
}

TEST_CASE("ns_detect raises an alarm at the threshold and promotes on confirmation") {
  LifecycleParams p;
  p.tau_act = 2;
  std::vector<Detector> reps{make_mature_detector(0, Pattern::parse("11110000"), p)};
  const std::vector<Antigen> stream{antigen("11110000", "x", 1), antigen("00001111", "y", 2),
                                    antigen("11110001", "z", 3)};
  const auto res = ns_detect(reps, stream, 4, always_yes_oracle());
  REQUIRE(res.alarms.size() == 1);
  CHECK(res.alarms[0].time == 3);
  REQUIRE(res.alarms[0].matched.size() == 2);
  CHECK(res.alarms[0].matched[0].source_id == "x");
  CHECK(res.alarms[0].matched[1].source_id == "z");
  CHECK(res.alarms[0].confirmed);
  CHECK(res.operator_calls == 1);
  CHECK(res.repertoire[0].state == DetectorState::MemoryResting);
  CHECK(res.repertoire[0].activation_threshold == 1);
}

TEST_CASE("rejected alarms reset stimulation and never kill") {
  LifecycleParams p;
  p.tau_act = 2;
  std::vector<Detector> reps{make_mature_detector(0, Pattern::parse("1111"), p)};
  std::vector<Antigen> stream(6, antigen("1111", "x"));
  const auto res = ns_detect(reps, stream, 4, always_no_oracle());
  CHECK(res.alarms.size() == 3);
  CHECK(res.operator_calls == 3);
  CHECK(res.confirmed == 0);
  CHECK(res.repertoire[0].state == DetectorState::MatureResting);
  CHECK(res.repertoire[0].stimulation_count == 0);
}

TEST_CASE("ground-truth oracle reads labels of matched sources") {
  const auto o = ground_truth_oracle({{"bad", Label::NonSelf}, {"good", Label::Self}});
  NsAlarm a;
  a.matched = {antigen("1", "good")};
  CHECK_FALSE(o(a));
  a.matched.push_back(antigen("1", "bad"));
  CHECK(o(a));
}

TEST_CASE("no alarms means no operator calls") {
  std::vector<Detector> reps{make_mature_detector(0, Pattern::parse("1111"), {})};
  const std::vector<Antigen> stream{antigen("0000", "x")};
  const auto res = ns_detect(reps, stream, 2, always_yes_oracle());
  CHECK(res.alarms.empty());
  CHECK(res.operator_calls == 0);
}

TEST_CASE("ns_detect rejects length mismatches") {
  std::vector<Detector> reps{make_mature_detector(0, Pattern::parse("1111"), {})};
  const std::vector<Antigen> stream{antigen("00000", "x")};
  CHECK_THROWS(ns_detect(reps, stream, 2, always_yes_oracle()));
}
