#include <algorithm>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/harness.hpp"
#include "ais/negative_selection.hpp"
#include "ais/rng.hpp"
#include "ais/text_util.hpp"

namespace ais {

std::string_view to_string(AntigenClass cls) {
  switch (cls) {
    case AntigenClass::Self: return "SELF";
    case AntigenClass::ForeignHarmless: return "HARMLESS";
    case AntigenClass::ForeignDangerous: return "DANGEROUS";
  }
  return "?";
}

namespace {

inline constexpr std::string_view kTopoSchemaHeader = "#schema=ais-topo-v1";

void require_annotations(Topology topology, const TopologyScenario& sc) {
  for (std::size_t i = 0; i < sc.antigens.size(); ++i) {
    const TopologyAntigen& a = sc.antigens[i];
    auto missing = [&](std::string_view field) {
      throw DataError(fmt::format("antigen {} ({}) lacks '{}' required by {}", i,
                                  a.antigen.source_id, field, to_string(topology)));
    };
    if (topology == Topology::InfectiousNonself && !a.pamp) missing("pamp");
    if ((topology == Topology::Danger || topology == Topology::DangerExtended) && !a.damaging) {
      missing("damaging");
    }
    if (topology == Topology::DangerExtended && !a.apc_group) missing("apc_group");
  }
  if ((topology == Topology::TwoSignal || topology == Topology::ThreeParty) && !sc.helpers) {
    throw DataError(fmt::format("{} needs a helper repertoire", to_string(topology)));
  }
}

}  // namespace

SignalOutcome simulate_signal_model(Topology topology, const TopologyScenario& sc) {
  require_annotations(topology, sc);
  sc.lifecycle.validate();
  sc.zone.validate();
  if (sc.r < 1 || sc.r > sc.pattern_length) throw ConfigError("topology scenario: bad r");

  SignalOutcome out;
  out.topology = topology;
  std::vector<Detector> repertoire;
  for (std::size_t i = 0; i < sc.detectors.size(); ++i) {
    repertoire.push_back(make_mature_detector(i, sc.detectors[i], sc.lifecycle));
  }
  std::vector<bool> gone(sc.antigens.size(), false);

  for (int t = 0; t < sc.ticks; ++t) {
    std::vector<std::size_t> present;
    std::vector<Antigen> pool;
    for (std::size_t j = 0; j < sc.antigens.size(); ++j) {
      if (gone[j]) continue;
      present.push_back(j);
      pool.push_back(sc.antigens[j].antigen);
    }

    // Danger zones raised by damaging antigens still present.
    std::vector<bool> in_zone(sc.antigens.size(), false);
    if (topology == Topology::Danger || topology == Topology::DangerExtended) {
      for (std::size_t j : present) {
        const TopologyAntigen& emitter = sc.antigens[j];
        if (!*emitter.damaging) continue;
        DangerAlarm alarm;
        alarm.emitter_id = emitter.antigen.source_id;
        alarm.emitter_start = emitter.antigen.start_time;
        alarm.time = emitter.antigen.start_time + t;
        alarm.emitter_resources = emitter.antigen.resources;
        const APCPresentation zone = build_danger_zone(alarm, pool, sc.zone);
        for (const Antigen& z : zone.presented) {
          for (std::size_t k : present) {
            const Antigen& a = sc.antigens[k].antigen;
            if (a.source_id == z.source_id && a.pattern == z.pattern) in_zone[k] = true;
          }
        }
      }
      if (topology == Topology::DangerExtended) {
        // Signal three: a licensed APC carries co-stimulation to its whole group.
        std::set<int> licensed;
        for (std::size_t k : present) {
          if (in_zone[k]) licensed.insert(*sc.antigens[k].apc_group);
        }
        for (std::size_t k : present) {
          if (licensed.count(*sc.antigens[k].apc_group)) in_zone[k] = true;
        }
      }
    }

    std::vector<std::vector<std::size_t>> hits(repertoire.size());
    for (std::size_t i = 0; i < repertoire.size(); ++i) {
      Detector& d = repertoire[i];
      if (!d.alive()) continue;
      for (std::size_t k : present) {
        if (matches(d.receptor, sc.antigens[k].antigen.pattern, sc.r)) hits[i].push_back(k);
      }
      const bool s1 = !hits[i].empty();
      bool s2 = false;
      auto any_hit = [&](auto pred) { return std::any_of(hits[i].begin(), hits[i].end(), pred); };
      switch (topology) {
        case Topology::Burnet:
          // Recognition alone suffices.
          s2 = s1;
          break;
        case Topology::TwoSignal:
        case Topology::ThreeParty: {
          const auto source =
              topology == Topology::TwoSignal ? Signal2Source::THelper : Signal2Source::Apc;
          s2 = signal2_permitted(topology, source, d.state) && any_hit([&](std::size_t k) {
                 return std::any_of(sc.helpers->begin(), sc.helpers->end(), [&](const Pattern& h) {
                   return matches(h, sc.antigens[k].antigen.pattern, sc.r);
                 });
               });
          break;
        }
        case Topology::InfectiousNonself:
          s2 = signal2_permitted(topology, Signal2Source::Apc, d.state) &&
               any_hit([&](std::size_t k) { return *sc.antigens[k].pamp; });
          break;
        case Topology::Danger:
        case Topology::DangerExtended:
          s2 = signal2_permitted(topology, Signal2Source::Apc, d.state) &&
               any_hit([&](std::size_t k) { return in_zone[k]; });
          break;
      }
      const DetectorState before = d.state;
      d = step_detector(d, s1, s2, s2, sc.lifecycle);
      if (d.state == DetectorState::Dead) ++out.deaths;
      if (d.state == DetectorState::Activated && before != DetectorState::Activated) {
        ++out.activations;
      }
    }

    for (std::size_t i = 0; i < repertoire.size(); ++i) {
      if (repertoire[i].state != DetectorState::Activated) continue;
      for (std::size_t k : hits[i]) {
        if (gone[k]) continue;
        gone[k] = true;
        switch (sc.antigens[k].cls) {
          case AntigenClass::Self: ++out.responses_self; break;
          case AntigenClass::ForeignHarmless: ++out.responses_harmless; break;
          case AntigenClass::ForeignDangerous: ++out.responses_dangerous; break;
        }
      }
    }
  }
  return out;
}

TopologyScenario canonical_topology_scenario(std::uint64_t seed) {
  TopologyScenario sc;
  Rng rng(seed);
  std::vector<Pattern> chosen;
  auto fresh = [&] {
    while (true) {
      const Pattern p = random_pattern(rng, sc.pattern_length);
      const bool clash = std::any_of(chosen.begin(), chosen.end(), [&](const Pattern& q) {
        return matches(p, q, sc.r);
      });
      if (!clash) {
        chosen.push_back(p);
        return p;
      }
    }
  };
  struct Row {
    const char* id;
    AntigenClass cls;
    bool pamp;
    bool damaging;
    int group;
    double start;
  };
  // Harmless h-1 shares an APC group with dangerous d-1.
  const Row rows[] = {
      {"self-0", AntigenClass::Self, false, false, 0, 0.0},
      {"self-1", AntigenClass::Self, false, false, 1, 0.0},
      {"self-2", AntigenClass::Self, false, false, 2, 0.0},
      {"harmless-0", AntigenClass::ForeignHarmless, true, false, 3, 100.0},
      {"harmless-1", AntigenClass::ForeignHarmless, true, false, 5, 100.0},
      {"dangerous-0", AntigenClass::ForeignDangerous, true, true, 4, 200.0},
      {"dangerous-1", AntigenClass::ForeignDangerous, true, true, 5, 200.0},
  };
  for (const Row& row : rows) {
    TopologyAntigen ta;
    ta.antigen.pattern = fresh();
    ta.antigen.source_id = row.id;
    ta.antigen.start_time = row.start;
    ta.antigen.active_from = row.start;
    ta.antigen.active_to = 1000.0;
    ta.antigen.resources = {std::string("res-") + row.id};
    ta.cls = row.cls;
    ta.pamp = row.pamp;
    ta.damaging = row.damaging;
    ta.apc_group = row.group;
    sc.antigens.push_back(ta);
    sc.detectors.push_back(ta.antigen.pattern);
  }

  // Helpers: exact foreign receptors, then censored against self.
  SelfSet self(sc.pattern_length);
  std::vector<Detector> candidates;
  for (const auto& ta : sc.antigens) {
    if (ta.cls == AntigenClass::Self) {
      self.insert(ta.antigen.pattern);
    }
    candidates.push_back(make_immature_detector(candidates.size(), ta.antigen.pattern, sc.lifecycle));
  }
  std::vector<Pattern> helpers;
  for (const Detector& d : censor(candidates, self, sc.r).survivors) helpers.push_back(d.receptor);
  sc.helpers = std::move(helpers);
  return sc;
}

namespace {

std::string opt_flag(const std::optional<bool>& b) { return b ? (*b ? "1" : "0") : "-"; }

}  // namespace

std::string serialize_topology_scenario(const TopologyScenario& sc) {
  std::string out(kTopoSchemaHeader);
  out += '\n';
  auto param = [&](std::string_view k, const std::string& v) {
    out += fmt::format("param\t{}\t{}\n", k, v);
  };
  param("L", std::to_string(sc.pattern_length));
  param("r", std::to_string(sc.r));
  param("ticks", std::to_string(sc.ticks));
  param("tau_act", std::to_string(sc.lifecycle.tau_act));
  param("tau_effector", std::to_string(sc.lifecycle.tau_effector));
  param("decay", std::to_string(sc.lifecycle.decay));
  param("tolerization_ticks", std::to_string(sc.lifecycle.tolerization_ticks));
  param("zone.w_t", format_number(sc.zone.w_time));
  param("zone.w_o", format_number(sc.zone.w_overlap));
  param("zone.w_r", format_number(sc.zone.w_resource));
  param("zone.tau_s", format_number(sc.zone.tau_s));
  param("zone.theta", format_number(sc.zone.theta));
  for (const auto& ta : sc.antigens) {
    std::string res;
    for (const auto& r : ta.antigen.resources) res += (res.empty() ? "" : ",") + r;
    out += fmt::format("antigen\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", ta.antigen.source_id,
                       to_string(ta.cls), ta.antigen.pattern.to_string(), opt_flag(ta.pamp),
                       opt_flag(ta.damaging),
                       ta.apc_group ? std::to_string(*ta.apc_group) : std::string("-"),
                       format_number(ta.antigen.start_time), format_number(ta.antigen.active_from),
                       format_number(ta.antigen.active_to), res.empty() ? "-" : res);
  }
  for (const auto& p : sc.detectors) out += fmt::format("detector\t{}\n", p.to_string());
  if (sc.helpers) {
    for (const auto& p : *sc.helpers) out += fmt::format("helper\t{}\n", p.to_string());
  }
  return out;
}

TopologyScenario parse_topology_scenario(std::string_view text) {
  TopologyScenario sc;
  std::size_t line_no = 0;
  std::optional<int> length;
  auto pattern = [&](std::string_view s, std::string_view field) {
    Pattern p;
    try {
      p = Pattern::parse(s);
    } catch (const ConfigError& e) {
      throw DataError(line_no, std::string(field), e.what());
    }
    if (length && p.length() != *length) {
      throw DataError(line_no, std::string(field), "pattern length differs from earlier patterns");
    }
    length = p.length();
    return p;
  };
  auto flag = [&](std::string_view s, std::string_view field) -> std::optional<bool> {
    if (s == "-") return std::nullopt;
    if (s == "0") return false;
    if (s == "1") return true;
    throw DataError(line_no, std::string(field), "expected 0, 1 or -");
  };
  auto number = [&](std::string_view s, std::string_view field) {
    auto v = text::to_double(s);
    if (!v) throw DataError(line_no, std::string(field), "not a number");
    return *v;
  };
  auto integer = [&](std::string_view s, std::string_view field) {
    auto v = text::to_int(s);
    if (!v) throw DataError(line_no, std::string(field), "not an integer");
    return static_cast<int>(*v);
  };

  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("#schema=") && line != kTopoSchemaHeader) {
        throw DataError(line_no, "schema", "unsupported schema");
      }
      continue;
    }
    const auto f = text::split(line, '\t');
    if (f[0] == "param") {
      if (f.size() != 3) throw DataError(line_no, "param", "expected key and value");
      const auto k = f[1];
      if (k == "L") sc.pattern_length = integer(f[2], k);
      else if (k == "r") sc.r = integer(f[2], k);
      else if (k == "ticks") sc.ticks = integer(f[2], k);
      else if (k == "tau_act") sc.lifecycle.tau_act = integer(f[2], k);
      else if (k == "tau_effector") sc.lifecycle.tau_effector = integer(f[2], k);
      else if (k == "decay") sc.lifecycle.decay = integer(f[2], k);
      else if (k == "tolerization_ticks") sc.lifecycle.tolerization_ticks = integer(f[2], k);
      else if (k == "zone.w_t") sc.zone.w_time = number(f[2], k);
      else if (k == "zone.w_o") sc.zone.w_overlap = number(f[2], k);
      else if (k == "zone.w_r") sc.zone.w_resource = number(f[2], k);
      else if (k == "zone.tau_s") sc.zone.tau_s = number(f[2], k);
      else if (k == "zone.theta") sc.zone.theta = number(f[2], k);
      else throw DataError(line_no, "param", fmt::format("unknown parameter '{}'", k));
    } else if (f[0] == "antigen") {
      if (f.size() != 11) throw DataError(line_no, "antigen", "expected 11 tab-separated fields");
      TopologyAntigen ta;
      if (f[1].empty()) throw DataError(line_no, "source_id", "empty identifier");
      ta.antigen.source_id = std::string(f[1]);
      if (f[2] == "SELF") ta.cls = AntigenClass::Self;
      else if (f[2] == "HARMLESS") ta.cls = AntigenClass::ForeignHarmless;
      else if (f[2] == "DANGEROUS") ta.cls = AntigenClass::ForeignDangerous;
      else throw DataError(line_no, "class", "expected SELF, HARMLESS or DANGEROUS");
      ta.antigen.pattern = pattern(f[3], "pattern");
      ta.pamp = flag(f[4], "pamp");
      ta.damaging = flag(f[5], "damaging");
      if (f[6] != "-") ta.apc_group = integer(f[6], "apc_group");
      ta.antigen.start_time = number(f[7], "start");
      ta.antigen.active_from = number(f[8], "active_from");
      ta.antigen.active_to = number(f[9], "active_to");
      if (f[10] != "-") {
        for (auto r : text::split(f[10], ',')) {
          if (r.empty()) throw DataError(line_no, "resources", "empty resource");
          ta.antigen.resources.insert(std::string(r));
        }
      }
      sc.antigens.push_back(std::move(ta));
    } else if (f[0] == "detector" || f[0] == "helper") {
      if (f.size() != 2) throw DataError(line_no, std::string(f[0]), "expected one pattern");
      const Pattern p = pattern(f[1], f[0]);
      if (f[0] == "detector") {
        sc.detectors.push_back(p);
      } else {
        if (!sc.helpers) sc.helpers.emplace();
        sc.helpers->push_back(p);
      }
    } else {
      throw DataError(line_no, "record", fmt::format("unknown record type '{}'", f[0]));
    }
  }
  if (length && *length != sc.pattern_length) {
    throw DataError("pattern length does not match param L");
  }
  return sc;
}

std::string format_signal_outcomes(const std::vector<SignalOutcome>& outcomes) {
  std::string out =
      "topology\tresponses_self\tresponses_harmless\tresponses_dangerous\tactivations\tdeaths\n";
  for (const auto& o : outcomes) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", to_string(o.topology), o.responses_self,
                       o.responses_harmless, o.responses_dangerous, o.activations, o.deaths);
  }
  return out;
}

}  // namespace ais
