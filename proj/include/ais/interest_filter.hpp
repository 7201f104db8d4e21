#pragma once

// Document filtering with user interest as the danger signal. Every browsed
// document presents its features as signal one; an interest event makes the
// whole document a danger zone and co-delivers signal two. Detectors that
// keep matching uninteresting features are tolerized away.

#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ais/core_model.hpp"

namespace ais {

inline constexpr std::string_view kBrowseSchemaHeader = "#schema=ais-browse-v1";
inline constexpr std::string_view kTokenHashVersion = "fnv1a64-v1";

/// Maps a feature token to an L-bit pattern: 64-bit FNV-1a, low L bits.
Pattern encode_token(std::string_view token, int pattern_length);

struct BrowseRecord {
  double time = 0.0;
  std::string doc_id;
  bool interest = false;
  std::vector<std::string> tokens;  // as recorded, in order
  std::set<Pattern> features;       // encoded tokens
};

/// Throws DataError on malformed lines, empty feature lists, or decreasing time.
std::vector<BrowseRecord> parse_session_log(std::istream& in, int pattern_length);
std::vector<BrowseRecord> parse_session_log(std::string_view text, int pattern_length);
std::string serialize_session_log(const std::vector<BrowseRecord>& log);

BrowseRecord make_record(double time, std::string doc_id, bool interest,
                         std::vector<std::string> tokens, int pattern_length);

struct ReplayOptions {
  // Fresh random mature detectors added before every Nth record (0 disables).
  std::size_t influx_every = 10;
  std::size_t influx_count = 2;
  std::uint64_t seed = 1;
};

struct DocumentScore {
  std::string doc_id;
  bool interest = false;
  std::size_t score = 0;
};

struct ReplayMetrics {
  // Score of each record against the repertoire as it stood when it arrived.
  std::vector<DocumentScore> online_scores;
  std::size_t tolerization_deaths = 0;
  std::size_t activations = 0;
  std::size_t influx = 0;
};

struct ReplayResult {
  std::vector<Detector> repertoire;
  ReplayMetrics metrics;
};

/// Number of ACTIVATED or MEMORY_RESTING detectors matching any feature.
std::size_t document_score(const BrowseRecord& record, const std::vector<Detector>& repertoire,
                           int r);

ReplayResult replay_session(const std::vector<BrowseRecord>& log, std::vector<Detector> repertoire,
                            int r, const LifecycleParams& params, const ReplayOptions& options = {});

/// Scores held-out records with a fixed repertoire (no learning).
std::vector<DocumentScore> rank_documents(const std::vector<BrowseRecord>& held_out,
                                          const std::vector<Detector>& repertoire, int r);

/// Probability that a random interesting document outscores a random
/// uninteresting one; ties count half. NaN when either class is empty.
double ranking_auc(const std::vector<DocumentScore>& scores);

struct DemoSession {
  std::vector<BrowseRecord> session;
  std::vector<BrowseRecord> held_out;
  std::vector<std::string> topic_a;  // interesting vocabulary
  std::vector<std::string> topic_b;  // uninteresting vocabulary
};

/// Alternating A/B session of `records` documents (A interesting, B not),
/// with every document carrying its topic's full vocabulary, plus a held-out
/// set mixing partial A and B documents.
DemoSession make_alternating_session(std::size_t records, int pattern_length, std::uint64_t seed);

}  // namespace ais
