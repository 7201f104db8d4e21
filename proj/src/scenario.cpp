#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/event_ingest.hpp"
#include "ais/rng.hpp"
#include "ais/text_util.hpp"

namespace ais {

namespace {

struct IntKey {
  std::string_view name;
  int ScenarioSpec::*field;
};

struct RealKey {
  std::string_view name;
  double ScenarioSpec::*field;
};

struct ProfileKey {
  std::string_view name;
  double MetricProfile::*field;
};

constexpr IntKey kIntKeys[] = {
    {"duration_ticks", &ScenarioSpec::duration_ticks},
    {"n_self_sources", &ScenarioSpec::n_self_sources},
    {"n_attack_sources", &ScenarioSpec::n_attack_sources},
    {"pattern_length", &ScenarioSpec::pattern_length},
    {"attack_start_min", &ScenarioSpec::attack_start_min},
    {"self_start_spread", &ScenarioSpec::self_start_spread},
    {"metric_period", &ScenarioSpec::metric_period},
    {"resource_pool", &ScenarioSpec::resource_pool},
};

constexpr RealKey kRealKeys[] = {
    {"tick_seconds", &ScenarioSpec::tick_seconds},
    {"attack_abort_probability", &ScenarioSpec::attack_abort_probability},
    {"drift", &ScenarioSpec::drift},
    {"drift_bit_flip", &ScenarioSpec::drift_bit_flip},
    {"engine_kill_rate", &ScenarioSpec::engine_kill_rate},
};

constexpr ProfileKey kProfileKeys[] = {
    {"mem_lo", &MetricProfile::mem_lo},
    {"mem_hi", &MetricProfile::mem_hi},
    {"disk_lo", &MetricProfile::disk_lo},
    {"disk_hi", &MetricProfile::disk_hi},
    {"file_changes_per_tick", &MetricProfile::file_changes_per_tick},
};

void require_probability(double p, std::string_view name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(fmt::format("{} must be a probability in [0, 1]", name));
  }
}

std::string resource_name(std::uint64_t i) { return fmt::format("res-{:02d}", i); }

std::set<std::string> pick_resources(Rng& rng, int pool, int count) {
  std::set<std::string> out;
  while (static_cast<int>(out.size()) < count) {
    out.insert(resource_name(uniform_index(rng, static_cast<std::uint64_t>(pool))));
  }
  return out;
}

Pattern drifted(Rng& rng, const Pattern& p, double flip) {
  std::uint64_t mask = 0;
  for (int bit = 0; bit < p.length(); ++bit) {
    if (bernoulli(rng, flip)) mask |= std::uint64_t{1} << bit;
  }
  if (mask == 0) mask = std::uint64_t{1} << uniform_index(rng, static_cast<std::uint64_t>(p.length()));
  return Pattern(p.bits() ^ mask, p.length());
}

}  // namespace

void ScenarioSpec::validate() const {
  if (duration_ticks < 1) throw ConfigError("duration_ticks must be >= 1");
  if (n_self_sources < 0 || n_attack_sources < 0) throw ConfigError("source counts must be >= 0");
  if (pattern_length < 1 || pattern_length > kMaxPatternLength) {
    throw ConfigError("pattern_length must be in [1, 64]");
  }
  if (!(tick_seconds > 0.0)) throw ConfigError("tick_seconds must be > 0");
  if (n_attack_sources > 0 && (attack_start_min < 0 || attack_start_min >= duration_ticks)) {
    throw ConfigError("attack_start_min must lie within the scenario duration");
  }
  if (self_start_spread < 1) throw ConfigError("self_start_spread must be >= 1");
  if (metric_period < 1) throw ConfigError("metric_period must be >= 1");
  if (resource_pool < 3) throw ConfigError("resource_pool must be >= 3");
  require_probability(attack_abort_probability, "attack_abort_probability");
  require_probability(drift, "drift");
  require_probability(drift_bit_flip, "drift_bit_flip");
  require_probability(engine_kill_rate, "engine_kill_rate");
  require_probability(self_profile.file_changes_per_tick, "self.file_changes_per_tick");
  require_probability(attack_profile.file_changes_per_tick, "attack.file_changes_per_tick");
  for (const MetricProfile* p : {&self_profile, &attack_profile}) {
    if (p->mem_lo < 0 || p->mem_hi < p->mem_lo || p->disk_lo < 0 || p->disk_hi < p->disk_lo) {
      throw ConfigError("metric profile bounds must satisfy 0 <= lo <= hi");
    }
  }
}

bool apply_scenario_key(ScenarioSpec& spec, std::string_view key, std::string_view value) {
  if (key.starts_with("scenario.")) key.remove_prefix(9);
  auto bad = [&](std::string_view what) {
    return ConfigError(fmt::format("scenario key '{}': expected {}, got '{}'", key, what, value));
  };
  for (const auto& k : kIntKeys) {
    if (k.name == key) {
      auto v = text::to_int(value);
      if (!v) throw bad("an integer");
      spec.*k.field = static_cast<int>(*v);
      return true;
    }
  }
  for (const auto& k : kRealKeys) {
    if (k.name == key) {
      auto v = text::to_double(value);
      if (!v) throw bad("a number");
      spec.*k.field = *v;
      return true;
    }
  }
  for (auto [prefix, profile] : {std::pair<std::string_view, MetricProfile*>{"self.", &spec.self_profile},
                                 {"attack.", &spec.attack_profile}}) {
    if (!key.starts_with(prefix)) continue;
    std::string_view rest = key.substr(prefix.size());
    for (const auto& k : kProfileKeys) {
      if (k.name == rest) {
        auto v = text::to_double(value);
        if (!v) throw bad("a number");
        (*profile).*k.field = *v;
        return true;
      }
    }
  }
  if (key == "attack_correlation") {
    auto v = text::to_bool(value);
    if (!v) throw bad("a boolean");
    spec.attack_correlation = *v;
    return true;
  }
  return false;
}

ScenarioSpec parse_scenario_spec(std::string_view text) {
  std::size_t bad_line = 0;
  auto entries = text::key_values(text, bad_line);
  if (bad_line) throw ConfigError(fmt::format("scenario line {}: expected key=value", bad_line));
  ScenarioSpec spec;
  for (const auto& kv : entries) {
    if (!apply_scenario_key(spec, kv.key, kv.value)) {
      throw ConfigError(fmt::format("scenario line {}: unknown key '{}'", kv.line, kv.key));
    }
  }
  spec.validate();
  return spec;
}

std::string format_scenario_spec(const ScenarioSpec& spec) {
  std::ostringstream out;
  for (const auto& k : kIntKeys) out << k.name << '=' << spec.*k.field << '\n';
  for (const auto& k : kRealKeys) out << k.name << '=' << format_number(spec.*k.field) << '\n';
  for (auto [prefix, profile] : {std::pair<std::string_view, const MetricProfile*>{"self.", &spec.self_profile},
                                 {"attack.", &spec.attack_profile}}) {
    for (const auto& k : kProfileKeys) {
      out << prefix << k.name << '=' << format_number((*profile).*k.field) << '\n';
    }
  }
  out << "attack_correlation=" << (spec.attack_correlation ? 1 : 0) << '\n';
  return out.str();
}

Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const int L = spec.pattern_length;

  struct SelfSource {
    std::string id;
    int start;
    Pattern pattern;
    std::set<std::string> resources;
  };
  struct AttackSource {
    std::string id;
    int start;
    Pattern pattern;
    std::set<std::string> resources;
    std::size_t victim;  // self source that shows the damage when uncorrelated
  };

  Scenario scenario;
  std::vector<SelfSource> selves;
  for (int i = 0; i < spec.n_self_sources; ++i) {
    SelfSource s;
    s.id = fmt::format("self-{:03d}", i);
    s.start = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.self_start_spread)));
    s.pattern = random_pattern(rng, L);
    s.resources = pick_resources(rng, spec.resource_pool, 2 + static_cast<int>(uniform_index(rng, 2)));
    scenario.labels.emplace(s.id, Label::Self);
    selves.push_back(std::move(s));
  }
  std::vector<AttackSource> attacks;
  const int attack_window = std::max(1, spec.duration_ticks - spec.attack_start_min - 20);
  for (int j = 0; j < spec.n_attack_sources; ++j) {
    AttackSource a;
    a.id = fmt::format("atk-{:03d}", j);
    a.start = spec.attack_start_min +
              static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(attack_window)));
    a.pattern = random_pattern(rng, L);
    a.resources = pick_resources(rng, spec.resource_pool, 1);
    a.resources.insert(fmt::format("atk-res-{:03d}", j));
    a.victim = selves.empty() ? 0 : uniform_index(rng, selves.size());
    scenario.labels.emplace(a.id, Label::NonSelf);
    attacks.push_back(std::move(a));
  }

  auto emit = [&](double time, const std::string& source, EventKind kind, double value,
                  std::optional<Pattern> pattern, std::set<std::string> resources,
                  bool engine = false) {
    scenario.events.push_back(
        HostEvent{time, source, kind, value, pattern, std::move(resources), engine});
  };

  const MetricProfile& sp = spec.self_profile;
  const MetricProfile& ap = spec.attack_profile;
  for (int tick = 0; tick < spec.duration_ticks; ++tick) {
    const double t = tick * spec.tick_seconds;
    for (std::size_t i = 0; i < selves.size(); ++i) {
      SelfSource& s = selves[i];
      if (tick < s.start) continue;
      if (tick > s.start && bernoulli(rng, spec.drift)) {
        s.pattern = drifted(rng, s.pattern, spec.drift_bit_flip);
      }
      emit(t, s.id, EventKind::Connection, 0.0, s.pattern, s.resources);
      if ((tick + static_cast<int>(i)) % spec.metric_period == 0) {
        emit(t, s.id, EventKind::MetricMem, uniform_real(rng, sp.mem_lo, sp.mem_hi), std::nullopt,
             {});
        emit(t, s.id, EventKind::MetricDisk, uniform_real(rng, sp.disk_lo, sp.disk_hi),
             std::nullopt, {});
      }
      if (bernoulli(rng, sp.file_changes_per_tick)) {
        auto it = s.resources.begin();
        std::advance(it, static_cast<long>(uniform_index(rng, s.resources.size())));
        emit(t, s.id, EventKind::FileChange, 1.0, std::nullopt, {*it});
      }
      if (bernoulli(rng, spec.engine_kill_rate)) {
        // Engine-initiated restart: a normal death that must not read as danger.
        emit(t, s.id, EventKind::ProcTerm, 15.0, std::nullopt, {}, true);
      }
    }
    for (const AttackSource& a : attacks) {
      if (tick < a.start) continue;
      emit(t, a.id, EventKind::Connection, 0.0, a.pattern, a.resources);
      const double mem = uniform_real(rng, ap.mem_lo, ap.mem_hi);
      const bool abort = bernoulli(rng, spec.attack_abort_probability);
      if (spec.attack_correlation) {
        emit(t, a.id, EventKind::MetricMem, mem, std::nullopt, {});
        emit(t, a.id, EventKind::MetricDisk, uniform_real(rng, ap.disk_lo, ap.disk_hi),
             std::nullopt, {});
        if (abort) emit(t, a.id, EventKind::ProcTerm, 6.0, std::nullopt, {});
      } else if (!selves.empty()) {
        const SelfSource& v = selves[a.victim];
        emit(t, v.id, EventKind::MetricMem, mem, std::nullopt, {});
        if (abort) emit(t, v.id, EventKind::ProcTerm, 6.0, std::nullopt, {});
      }
    }
  }
  return scenario;
}

}  // namespace ais
