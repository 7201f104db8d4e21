#include "ais/negative_selection.hpp"

#include "ais/errors.hpp"
#include "ais/rng.hpp"

namespace ais {

void SelfSet::insert(const Pattern& p) {
  if (length_ == 0) length_ = p.length();
  if (p.length() != length_) {
    throw ConfigError("self pattern length " + std::to_string(p.length()) + " differs from " +
                      std::to_string(length_));
  }
  patterns_.insert(p);
}

CostimOracle always_yes_oracle() {
  return [](const NsAlarm&) { return true; };
}

CostimOracle always_no_oracle() {
  return [](const NsAlarm&) { return false; };
}

CostimOracle ground_truth_oracle(std::map<std::string, Label> labels) {
  return [labels = std::move(labels)](const NsAlarm& alarm) {
    for (const Antigen& a : alarm.matched) {
      auto it = labels.find(a.source_id);
      if (it != labels.end() && it->second == Label::NonSelf) return true;
    }
    return false;
  };
}

std::vector<Detector> generate_detectors(std::size_t count, int pattern_length,
                                         std::uint64_t rng_seed, const LifecycleParams& params) {
  Rng rng(rng_seed);
  std::vector<Detector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(make_immature_detector(i, random_pattern(rng, pattern_length), params));
  }
  return out;
}

CensorResult censor(std::span<const Detector> candidates, const SelfSet& self_set, int r) {
  CensorResult result;
  for (const Detector& candidate : candidates) {
    if (candidate.state != DetectorState::Immature) {
      throw ContractViolation("censor expects immature candidates");
    }
    bool self_reactive = false;
    for (const Pattern& s : self_set.patterns()) {
      if (matches(candidate.receptor, s, r)) {
        self_reactive = true;
        break;
      }
    }
    Detector d = candidate;
    d.maturation_ticks_remaining = 0;
    if (self_reactive) {
      d.state = DetectorState::Dead;
      result.eliminated.push_back(d);
    } else {
      d.state = DetectorState::MatureResting;
      result.survivors.push_back(d);
    }
  }
  return result;
}

std::set<Pattern> detectable_nonself(std::span<const Detector> repertoire, const SelfSet& self_set,
                                     int r) {
  const int L = self_set.pattern_length();
  if (L < 1 || L > 16) throw ConfigError("detectable_nonself needs 1 <= L <= 16");
  std::set<Pattern> out;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << L); ++x) {
    const Pattern p(x, L);
    if (self_set.contains(p)) continue;
    for (const Detector& d : repertoire) {
      if (d.alive() && matches(d.receptor, p, r)) {
        out.insert(p);
        break;
      }
    }
  }
  return out;
}

NsMonitor::NsMonitor(std::vector<Detector> repertoire, int r, CostimOracle oracle)
    : repertoire_(std::move(repertoire)),
      pending_(repertoire_.size()),
      r_(r),
      oracle_(std::move(oracle)) {}

std::vector<NsAlarm> NsMonitor::present(const Antigen& antigen) {
  std::vector<NsAlarm> alarms;
  for (std::size_t i = 0; i < repertoire_.size(); ++i) {
    Detector& d = repertoire_[i];
    if (!d.resting()) continue;
    if (!matches(d.receptor, antigen.pattern, r_)) continue;
    ++d.stimulation_count;
    pending_[i].push_back(antigen);
    if (d.stimulation_count < d.activation_threshold) continue;

    // The activation episode resolves within the same presentation: the
    // operator either confirms (memory) or rejects (back to naive rest).
    d.state = DetectorState::Activated;
    NsAlarm alarm{d.id, antigen.active_to, std::move(pending_[i])};
    pending_[i].clear();
    ++operator_calls_;
    const bool confirmed = oracle_(alarm);
    alarm.confirmed = confirmed;
    d.stimulation_count = 0;
    if (confirmed) {
      ++confirmed_;
      d.state = DetectorState::MemoryResting;
      d.activation_threshold = 1;
    } else {
      d.state = d.activation_threshold == 1 ? DetectorState::MemoryResting
                                            : DetectorState::MatureResting;
    }
    alarms.push_back(std::move(alarm));
  }
  return alarms;
}

NsDetectResult ns_detect(std::vector<Detector> repertoire, std::span<const Antigen> antigens,
                         int r, const CostimOracle& oracle) {
  NsMonitor monitor(std::move(repertoire), r, oracle);
  NsDetectResult result;
  for (const Antigen& a : antigens) {
    auto alarms = monitor.present(a);
    for (auto& alarm : alarms) result.alarms.push_back(std::move(alarm));
  }
  result.operator_calls = monitor.operator_calls();
  result.confirmed = monitor.confirmed();
  result.repertoire = monitor.repertoire();
  return result;
}

}  // namespace ais
