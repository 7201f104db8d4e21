#pragma once

// Classical negative-selection baseline: random detectors are censored
// against a self set, then raise alarms once enough matches accumulate and
// an operator (here an oracle) decides whether to promote them to memory.

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ais/core_model.hpp"

namespace ais {

class SelfSet {
 public:
  SelfSet() = default;
  explicit SelfSet(int pattern_length) : length_(pattern_length) {}

  /// Adds a pattern; duplicates are ignored. Throws ConfigError on a length mismatch.
  void insert(const Pattern& p);

  const std::set<Pattern>& patterns() const { return patterns_; }
  std::size_t size() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }
  bool contains(const Pattern& p) const { return patterns_.count(p) != 0; }
  int pattern_length() const { return length_; }

 private:
  std::set<Pattern> patterns_;
  int length_ = 0;
};

/// An activation of a baseline detector, handed to the operator.
struct NsAlarm {
  std::uint64_t detector_id = 0;
  double time = 0.0;
  // Antigens matched since the detector's last reset, in arrival order.
  std::vector<Antigen> matched;
  // Operator verdict, filled in once the oracle has been consulted.
  bool confirmed = false;
};

/// Stand-in for the human operator. Must be deterministic per alarm.
using CostimOracle = std::function<bool(const NsAlarm&)>;

CostimOracle always_yes_oracle();
CostimOracle always_no_oracle();
/// Confirms an alarm iff any matched antigen's source is labelled NONSELF.
CostimOracle ground_truth_oracle(std::map<std::string, Label> labels);

/// `count` immature detectors with uniform random receptors. The sequence is
/// prefix-stable: the first n detectors for a seed do not depend on `count`.
std::vector<Detector> generate_detectors(std::size_t count, int pattern_length,
                                         std::uint64_t rng_seed,
                                         const LifecycleParams& params = {});

struct CensorResult {
  std::vector<Detector> survivors;   // promoted to MATURE_RESTING
  std::vector<Detector> eliminated;  // DEAD
};

/// Eliminates every candidate whose receptor matches some self pattern at
/// threshold r. Throws ContractViolation if a candidate is not immature.
CensorResult censor(std::span<const Detector> candidates, const SelfSet& self_set, int r);

/// Every non-self pattern of length L that some alive detector matches.
/// Enumerates all 2^L patterns, so L must be at most 16 (ConfigError otherwise).
std::set<Pattern> detectable_nonself(std::span<const Detector> repertoire, const SelfSet& self_set,
                                     int r);

struct NsDetectResult {
  std::vector<NsAlarm> alarms;
  std::vector<Detector> repertoire;
  std::size_t operator_calls = 0;
  std::size_t confirmed = 0;
};

/// Presents each antigen, in order, to every resting detector. Matches
/// accumulate per detector across distinct antigens; reaching the activation
/// threshold raises an alarm. A confirmed alarm promotes the detector to
/// memory (threshold 1); a rejected one resets its stimulation. Signal one
/// alone never kills here.
///
/// Throws ConfigError on a pattern-length mismatch.
NsDetectResult ns_detect(std::vector<Detector> repertoire, std::span<const Antigen> antigens,
                         int r, const CostimOracle& oracle);

/// Incremental form used by streaming drivers. Keeps matched antigens of
/// partially stimulated detectors between calls.
class NsMonitor {
 public:
  NsMonitor(std::vector<Detector> repertoire, int r, CostimOracle oracle);

  std::vector<NsAlarm> present(const Antigen& antigen);

  const std::vector<Detector>& repertoire() const { return repertoire_; }
  std::size_t operator_calls() const { return operator_calls_; }
  std::size_t confirmed() const { return confirmed_; }

 private:
  std::vector<Detector> repertoire_;
  std::vector<std::vector<Antigen>> pending_;
  int r_;
  CostimOracle oracle_;
  std::size_t operator_calls_ = 0;
  std::size_t confirmed_ = 0;
};

}  // namespace ais
