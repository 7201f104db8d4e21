#pragma once

// Domain types and the pure lifecycle rules shared by every engine mode.

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ais {

inline constexpr int kMaxPatternLength = 64;
inline constexpr int kDefaultPatternLength = 32;

/// Fixed-length bit string. Position 0 is the leftmost character of the
/// textual form and is stored in the least significant bit.
class Pattern {
 public:
  Pattern() = default;

  /// Throws ConfigError unless 1 <= length <= 64. Bits above `length` are dropped.
  Pattern(std::uint64_t bits, int length);

  /// Parses a string of '0'/'1'. Throws ConfigError on anything else.
  static Pattern parse(std::string_view text);

  int length() const { return length_; }
  std::uint64_t bits() const { return bits_; }
  bool bit(int position) const { return (bits_ >> position) & 1U; }
  std::uint64_t mask() const;

  Pattern with_flipped(int position) const;
  int hamming_distance(const Pattern& other) const;
  std::string to_string() const;

  friend bool operator==(const Pattern&, const Pattern&) = default;
  friend auto operator<=>(const Pattern& a, const Pattern& b) {
    if (auto c = a.length_ <=> b.length_; c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

 private:
  std::uint64_t bits_ = 0;
  int length_ = 0;
};

enum class Label { Self, NonSelf };

std::string_view to_string(Label label);

/// Something the system may react to (a connection, an executable, a
/// document feature) together with the context used for causal proximity.
struct Antigen {
  Pattern pattern;
  std::string source_id;
  double start_time = 0.0;
  double active_from = 0.0;
  double active_to = 0.0;
  std::set<std::string> resources;
  // Ground truth for scoring only. Detection code never reads it.
  std::optional<Label> truth_label;
};

enum class DetectorState { Immature, MatureResting, Activated, MemoryResting, Dead };

std::string_view to_string(DetectorState state);

struct LifecycleParams {
  int tau_act = 3;                // stimulations needed to activate a naive detector
  int tau_effector = 5;           // effector lifetime in ticks without signal one
  int decay = 1;                  // stimulation lost per quiet tick
  int maturation_ticks = 10;      // immature period before a detector may be stimulated
  int tolerization_ticks = 1;     // consecutive unpaired signal-one ticks before death

  /// Throws ConfigError if any value is out of range.
  void validate() const;
};

struct Detector {
  std::uint64_t id = 0;
  Pattern receptor;
  DetectorState state = DetectorState::Immature;
  std::uint64_t age_ticks = 0;
  int stimulation_count = 0;
  int activation_threshold = 3;
  int effector_ticks_remaining = 0;
  int maturation_ticks_remaining = 0;
  // Consecutive ticks of signal one without signal two while resting.
  int unpaired_ticks = 0;
  // Whether danger was confirmed (e.g. by the sandbox) during the current
  // activation episode. Cleared when the episode ends.
  bool danger_confirmed = false;

  bool alive() const { return state != DetectorState::Dead; }
  bool resting() const {
    return state == DetectorState::MatureResting || state == DetectorState::MemoryResting;
  }
};

Detector make_immature_detector(std::uint64_t id, const Pattern& receptor,
                                const LifecycleParams& params);
Detector make_mature_detector(std::uint64_t id, const Pattern& receptor,
                              const LifecycleParams& params);

enum class SignalKind { Signal0Prime, Signal1Match, Signal2Costim, Signal3Routed };

enum class Topology { Burnet, TwoSignal, ThreeParty, InfectiousNonself, Danger, DangerExtended };

inline constexpr Topology kAllTopologies[] = {
    Topology::Burnet,           Topology::TwoSignal, Topology::ThreeParty,
    Topology::InfectiousNonself, Topology::Danger,   Topology::DangerExtended};

std::string_view to_string(SignalKind kind);
std::string_view to_string(Topology topology);
/// Throws ConfigError for unknown names. Accepts the upper-case names.
Topology parse_topology(std::string_view name);

/// Whether `kind` may occur at all under `topology`.
bool signal_legal(Topology topology, SignalKind kind);

enum class Signal2Source { Apc, THelper, OtherCell };

/// Length of the longest run of consecutive positions at which the patterns agree.
int longest_agreeing_run(const Pattern& a, const Pattern& b);

/// Longest agreeing run divided by the pattern length. Throws ConfigError
/// on length mismatch.
double affinity(const Pattern& receptor, const Pattern& antigen_pattern);

/// r-contiguous matching: true iff some run of at least `r` consecutive
/// agreeing positions exists. Throws ConfigError if r is outside [1, L] or
/// the lengths differ.
bool matches(const Pattern& receptor, const Pattern& antigen_pattern, int r);

/// One tick of the lymphocyte lifecycle. Pure: returns the successor.
///
/// Resting cells (virgin or memory) activate on signals one and two together,
/// die on signal one alone, and ignore signal two alone. Immature cells
/// ignore signal two and die on signal one. Effectors ignore signal two, are
/// restimulated by signal one, and revert to rest after `tau_effector` quiet
/// ticks: to memory when danger was confirmed, otherwise to naive rest.
///
/// Throws ContractViolation when called on a dead detector.
Detector step_detector(const Detector& d, bool s1, bool s2, bool danger_confirmed,
                       const LifecycleParams& params);

/// Hypermutated clones of an activated detector. Clones start resting with
/// `clone_threshold` and must earn activation themselves. Clone ids are 0;
/// owners assign real ids. Throws ContractViolation unless `d` is activated.
std::vector<Detector> clone_and_mutate(const Detector& d, std::size_t n_clones,
                                       double mutation_rate, std::uint64_t rng_seed,
                                       int clone_threshold = LifecycleParams{}.tau_act);

/// Whether signal two may reach a detector, by topology, source, and lifecycle state.
bool signal2_permitted(Topology topology, Signal2Source source, DetectorState state);

/// Uniformly random pattern of the given length.
template <typename Engine>
Pattern random_pattern(Engine& rng, int length) {
  return Pattern(rng(), length);
}

}  // namespace ais
