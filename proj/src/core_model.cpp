#include "ais/core_model.hpp"

#include <algorithm>
#include <bit>

#include "ais/errors.hpp"
#include "ais/rng.hpp"

namespace ais {

namespace {

std::uint64_t mask_for(int length) {
  return length >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << length) - 1);
}

void require_same_length(const Pattern& a, const Pattern& b) {
  if (a.length() != b.length() || a.length() == 0) {
    throw ConfigError("pattern length mismatch: " + std::to_string(a.length()) + " vs " +
                      std::to_string(b.length()));
  }
}

}  // namespace

Pattern::Pattern(std::uint64_t bits, int length) : length_(length) {
  if (length < 1 || length > kMaxPatternLength) {
    throw ConfigError("pattern length must be in [1, 64], got " + std::to_string(length));
  }
  bits_ = bits & mask_for(length);
}

Pattern Pattern::parse(std::string_view text) {
  if (text.empty() || text.size() > kMaxPatternLength) {
    throw ConfigError("pattern length must be in [1, 64], got " + std::to_string(text.size()));
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1') {
      bits |= std::uint64_t{1} << i;
    } else if (text[i] != '0') {
      throw ConfigError("pattern contains non-binary symbol '" + std::string(1, text[i]) + "'");
    }
  }
  return Pattern(bits, static_cast<int>(text.size()));
}

std::uint64_t Pattern::mask() const { return mask_for(length_); }

Pattern Pattern::with_flipped(int position) const {
  return Pattern(bits_ ^ (std::uint64_t{1} << position), length_);
}

int Pattern::hamming_distance(const Pattern& other) const {
  require_same_length(*this, other);
  return std::popcount(bits_ ^ other.bits_);
}

std::string Pattern::to_string() const {
  std::string out(static_cast<std::size_t>(length_), '0');
  for (int i = 0; i < length_; ++i) {
    if (bit(i)) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

std::string_view to_string(Label label) {
  return label == Label::Self ? "SELF" : "NONSELF";
}

std::string_view to_string(DetectorState state) {
  switch (state) {
    case DetectorState::Immature: return "IMMATURE";
    case DetectorState::MatureResting: return "MATURE_RESTING";
    case DetectorState::Activated: return "ACTIVATED";
    case DetectorState::MemoryResting: return "MEMORY_RESTING";
    case DetectorState::Dead: return "DEAD";
  }
  return "?";
}

std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::Signal0Prime: return "SIGNAL0_PRIME";
    case SignalKind::Signal1Match: return "SIGNAL1_MATCH";
    case SignalKind::Signal2Costim: return "SIGNAL2_COSTIM";
    case SignalKind::Signal3Routed: return "SIGNAL3_ROUTED";
  }
  return "?";
}

std::string_view to_string(Topology topology) {
  switch (topology) {
    case Topology::Burnet: return "BURNET";
    case Topology::TwoSignal: return "TWO_SIGNAL";
    case Topology::ThreeParty: return "THREE_PARTY";
    case Topology::InfectiousNonself: return "INFECTIOUS_NONSELF";
    case Topology::Danger: return "DANGER";
    case Topology::DangerExtended: return "DANGER_EXTENDED";
  }
  return "?";
}

Topology parse_topology(std::string_view name) {
  for (Topology t : kAllTopologies) {
    if (to_string(t) == name) return t;
  }
  throw ConfigError("unknown topology '" + std::string(name) + "'");
}

bool signal_legal(Topology topology, SignalKind kind) {
  switch (kind) {
    case SignalKind::Signal1Match: return true;
    case SignalKind::Signal2Costim: return topology != Topology::Burnet;
    case SignalKind::Signal0Prime:
      return topology == Topology::InfectiousNonself || topology == Topology::Danger ||
             topology == Topology::DangerExtended;
    case SignalKind::Signal3Routed: return topology == Topology::DangerExtended;
  }
  return false;
}

void LifecycleParams::validate() const {
  if (tau_act < 1) throw ConfigError("tau_act must be >= 1");
  if (tau_effector < 1) throw ConfigError("tau_effector must be >= 1");
  if (decay < 0) throw ConfigError("decay must be >= 0");
  if (maturation_ticks < 1) throw ConfigError("maturation_ticks must be >= 1");
  if (tolerization_ticks < 1) throw ConfigError("tolerization_ticks must be >= 1");
}

Detector make_immature_detector(std::uint64_t id, const Pattern& receptor,
                                const LifecycleParams& params) {
  Detector d;
  d.id = id;
  d.receptor = receptor;
  d.state = DetectorState::Immature;
  d.activation_threshold = params.tau_act;
  d.maturation_ticks_remaining = params.maturation_ticks;
  return d;
}

Detector make_mature_detector(std::uint64_t id, const Pattern& receptor,
                              const LifecycleParams& params) {
  Detector d;
  d.id = id;
  d.receptor = receptor;
  d.state = DetectorState::MatureResting;
  d.activation_threshold = params.tau_act;
  return d;
}

int longest_agreeing_run(const Pattern& a, const Pattern& b) {
  require_same_length(a, b);
  std::uint64_t run = ~(a.bits() ^ b.bits()) & a.mask();
  int longest = 0;
  // Each iteration keeps only positions that start a run one longer.
  while (run != 0) {
    run &= run >> 1;
    ++longest;
  }
  return longest;
}

double affinity(const Pattern& receptor, const Pattern& antigen_pattern) {
  return static_cast<double>(longest_agreeing_run(receptor, antigen_pattern)) /
         static_cast<double>(receptor.length());
}

bool matches(const Pattern& receptor, const Pattern& antigen_pattern, int r) {
  require_same_length(receptor, antigen_pattern);
  if (r < 1 || r > receptor.length()) {
    throw ConfigError("match length r must be in [1, " + std::to_string(receptor.length()) +
                      "], got " + std::to_string(r));
  }
  std::uint64_t run = ~(receptor.bits() ^ antigen_pattern.bits()) & receptor.mask();
  for (int i = 1; i < r && run != 0; ++i) run &= run >> 1;
  return run != 0;
}

Detector step_detector(const Detector& d, bool s1, bool s2, bool danger_confirmed,
                       const LifecycleParams& params) {
  if (d.state == DetectorState::Dead) {
    throw ContractViolation("step_detector called on a dead detector");
  }
  Detector next = d;
  ++next.age_ticks;

  switch (d.state) {
    case DetectorState::Immature:
      // Signal two cannot reach an immature cell from any source.
      if (s1) {
        next.state = DetectorState::Dead;
        next.maturation_ticks_remaining = 0;
        return next;
      }
      if (--next.maturation_ticks_remaining <= 0) {
        next.maturation_ticks_remaining = 0;
        next.state = DetectorState::MatureResting;
      }
      return next;

    case DetectorState::MatureResting:
    case DetectorState::MemoryResting:
      if (s1 && s2) {
        next.unpaired_ticks = 0;
        ++next.stimulation_count;
        if (next.stimulation_count >= next.activation_threshold) {
          next.state = DetectorState::Activated;
          next.effector_ticks_remaining = params.tau_effector;
          next.danger_confirmed = danger_confirmed;
        }
      } else if (s1) {
        if (++next.unpaired_ticks >= params.tolerization_ticks) {
          next.state = DetectorState::Dead;
        }
      } else {
        next.unpaired_ticks = 0;
        if (!s2) next.stimulation_count = std::max(0, next.stimulation_count - params.decay);
      }
      return next;

    case DetectorState::Activated:
      next.danger_confirmed = d.danger_confirmed || danger_confirmed;
      if (s1) {
        next.effector_ticks_remaining = params.tau_effector;
        return next;
      }
      if (--next.effector_ticks_remaining <= 0) {
        next.effector_ticks_remaining = 0;
        next.stimulation_count = 0;
        next.unpaired_ticks = 0;
        if (next.danger_confirmed) {
          next.state = DetectorState::MemoryResting;
          next.activation_threshold = 1;
        } else {
          next.state = DetectorState::MatureResting;
        }
        next.danger_confirmed = false;
      }
      return next;

    case DetectorState::Dead:
      break;
  }
  return next;
}

std::vector<Detector> clone_and_mutate(const Detector& d, std::size_t n_clones,
                                       double mutation_rate, std::uint64_t rng_seed,
                                       int clone_threshold) {
  if (d.state != DetectorState::Activated) {
    throw ContractViolation("clone_and_mutate requires an activated detector");
  }
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
    throw ConfigError("mutation_rate must be in [0, 1]");
  }
  Rng rng(rng_seed);
  std::vector<Detector> clones;
  clones.reserve(n_clones);
  for (std::size_t i = 0; i < n_clones; ++i) {
    std::uint64_t flips = 0;
    for (int bit = 0; bit < d.receptor.length(); ++bit) {
      if (bernoulli(rng, mutation_rate)) flips |= std::uint64_t{1} << bit;
    }
    Detector clone;
    clone.receptor = Pattern(d.receptor.bits() ^ flips, d.receptor.length());
    clone.state = DetectorState::MatureResting;
    clone.activation_threshold = clone_threshold;
    clones.push_back(clone);
  }
  return clones;
}

bool signal2_permitted(Topology topology, Signal2Source source, DetectorState state) {
  if (state == DetectorState::Immature || state == DetectorState::Dead) return false;
  switch (topology) {
    case Topology::Burnet: return false;
    case Topology::TwoSignal: return source == Signal2Source::THelper;
    case Topology::ThreeParty:
    case Topology::InfectiousNonself:
    case Topology::Danger:
    case Topology::DangerExtended: return source == Signal2Source::Apc;
  }
  return false;
}

}  // namespace ais
