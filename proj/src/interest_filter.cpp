#include "ais/interest_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/event_ingest.hpp"
#include "ais/negative_selection.hpp"
#include "ais/rng.hpp"
#include "ais/text_util.hpp"

namespace ais {

Pattern encode_token(std::string_view token, int pattern_length) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Pattern(h, pattern_length);
}

BrowseRecord make_record(double time, std::string doc_id, bool interest,
                         std::vector<std::string> tokens, int pattern_length) {
  BrowseRecord rec;
  rec.time = time;
  rec.doc_id = std::move(doc_id);
  rec.interest = interest;
  rec.tokens = std::move(tokens);
  for (const auto& t : rec.tokens) rec.features.insert(encode_token(t, pattern_length));
  return rec;
}

std::vector<BrowseRecord> parse_session_log(std::istream& in, int pattern_length) {
  std::vector<BrowseRecord> log;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("#schema=") && line != kBrowseSchemaHeader) {
        throw DataError(line_no, "schema", "unsupported schema '" + std::string(line) + "'");
      }
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() != 4) throw DataError(line_no, "record", "expected 4 tab-separated fields");
    auto time = text::to_double(fields[0]);
    if (!time || *time < 0) throw DataError(line_no, "time", "not a non-negative number");
    if (fields[1].empty()) throw DataError(line_no, "doc_id", "empty identifier");
    auto interest = text::to_bool(fields[2]);
    if (!interest || (fields[2] != "0" && fields[2] != "1")) {
      throw DataError(line_no, "interest", "expected 0 or 1");
    }
    std::vector<std::string> tokens;
    if (!fields[3].empty() && fields[3] != "-") {
      for (std::string_view t : text::split(fields[3], ',')) {
        if (t.empty()) throw DataError(line_no, "features", "empty token");
        tokens.emplace_back(t);
      }
    }
    if (tokens.empty()) throw DataError(line_no, "features", "record has no features");
    if (!log.empty() && *time < log.back().time) {
      throw DataError(line_no, "time", "timestamp precedes previous record");
    }
    log.push_back(make_record(*time, std::string(fields[1]), *interest, std::move(tokens),
                              pattern_length));
  }
  return log;
}

std::vector<BrowseRecord> parse_session_log(std::string_view text, int pattern_length) {
  std::istringstream in{std::string(text)};
  return parse_session_log(in, pattern_length);
}

std::string serialize_session_log(const std::vector<BrowseRecord>& log) {
  std::string out(kBrowseSchemaHeader);
  out += '\n';
  for (const auto& rec : log) {
    out += format_number(rec.time);
    out += '\t';
    out += rec.doc_id;
    out += '\t';
    out += rec.interest ? '1' : '0';
    out += '\t';
    for (std::size_t i = 0; i < rec.tokens.size(); ++i) {
      if (i) out += ',';
      out += rec.tokens[i];
    }
    out += '\n';
  }
  return out;
}

std::size_t document_score(const BrowseRecord& record, const std::vector<Detector>& repertoire,
                           int r) {
  std::size_t score = 0;
  for (const Detector& d : repertoire) {
    if (d.state != DetectorState::Activated && d.state != DetectorState::MemoryResting) continue;
    for (const Pattern& f : record.features) {
      if (matches(d.receptor, f, r)) {
        ++score;
        break;
      }
    }
  }
  return score;
}

ReplayResult replay_session(const std::vector<BrowseRecord>& log, std::vector<Detector> repertoire,
                            int r, const LifecycleParams& params, const ReplayOptions& options) {
  params.validate();
  ReplayResult result;
  Rng influx_rng(options.seed);
  std::uint64_t next_id = 0;
  for (const Detector& d : repertoire) next_id = std::max(next_id, d.id + 1);

  for (std::size_t n = 0; n < log.size(); ++n) {
    const BrowseRecord& rec = log[n];
    if (options.influx_every > 0 && n > 0 && n % options.influx_every == 0 &&
        !rec.features.empty()) {
      const int L = rec.features.begin()->length();
      for (std::size_t k = 0; k < options.influx_count; ++k) {
        repertoire.push_back(make_mature_detector(next_id++, random_pattern(influx_rng, L), params));
        ++result.metrics.influx;
      }
    }

    result.metrics.online_scores.push_back(
        {rec.doc_id, rec.interest, document_score(rec, repertoire, r)});

    for (Detector& d : repertoire) {
      if (!d.alive()) continue;
      const bool s1 = std::any_of(rec.features.begin(), rec.features.end(),
                                  [&](const Pattern& f) { return matches(d.receptor, f, r); });
      // The document is the zone: interest reaches exactly the matching detectors.
      const bool s2 = s1 && rec.interest;
      const DetectorState before = d.state;
      d = step_detector(d, s1, s2, s2, params);
      if (d.state == DetectorState::Dead && before != DetectorState::Immature) {
        ++result.metrics.tolerization_deaths;
      }
      if (d.state == DetectorState::Activated && before != DetectorState::Activated) {
        ++result.metrics.activations;
      }
    }
  }
  result.repertoire = std::move(repertoire);
  return result;
}

std::vector<DocumentScore> rank_documents(const std::vector<BrowseRecord>& held_out,
                                          const std::vector<Detector>& repertoire, int r) {
  std::vector<DocumentScore> out;
  out.reserve(held_out.size());
  for (const auto& rec : held_out) {
    out.push_back({rec.doc_id, rec.interest, document_score(rec, repertoire, r)});
  }
  return out;
}

double ranking_auc(const std::vector<DocumentScore>& scores) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const auto& pos : scores) {
    if (!pos.interest) continue;
    for (const auto& neg : scores) {
      if (neg.interest) continue;
      ++pairs;
      if (pos.score > neg.score) {
        wins += 1.0;
      } else if (pos.score == neg.score) {
        wins += 0.5;
      }
    }
  }
  if (pairs == 0) return std::numeric_limits<double>::quiet_NaN();
  return wins / static_cast<double>(pairs);
}

DemoSession make_alternating_session(std::size_t records, int pattern_length, std::uint64_t seed) {
  Rng rng(seed);
  DemoSession demo;
  constexpr std::size_t kVocabulary = 6;
  std::set<Pattern> used;
  auto vocabulary = [&](char topic) {
    std::vector<std::string> words;
    while (words.size() < kVocabulary) {
      std::string w = fmt::format("{}-{:06x}", topic, rng() & 0xffffff);
      if (used.insert(encode_token(w, pattern_length)).second) words.push_back(std::move(w));
    }
    return words;
  };
  demo.topic_a = vocabulary('a');
  demo.topic_b = vocabulary('b');

  for (std::size_t i = 0; i < records; ++i) {
    const bool a = i % 2 == 0;
    demo.session.push_back(make_record(static_cast<double>(i), fmt::format("doc-{:04d}", i), a,
                                       a ? demo.topic_a : demo.topic_b, pattern_length));
  }

  constexpr std::size_t kHeldOutPerTopic = 10;
  constexpr std::size_t kTokensPerHeldOut = 3;
  for (std::size_t i = 0; i < 2 * kHeldOutPerTopic; ++i) {
    const bool a = i % 2 == 0;
    std::vector<std::string> pool = a ? demo.topic_a : demo.topic_b;
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k < kTokensPerHeldOut; ++k) {
      const auto pick = uniform_index(rng, pool.size());
      tokens.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<long>(pick));
    }
    demo.held_out.push_back(make_record(static_cast<double>(records + i),
                                        fmt::format("held-{:04d}", i), a, std::move(tokens),
                                        pattern_length));
  }
  return demo;
}

}  // namespace ais
