#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "ais/errors.hpp"
#include "ais/harness.hpp"
#include "ais/negative_selection.hpp"

namespace ais {

namespace {

std::vector<BrowseRecord> read_session(const std::filesystem::path& path, int L) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read session '{}'", path.string()));
  return parse_session_log(in, L);
}

}  // namespace

ReplayReport run_replay(const ReplaySettings& s, std::uint64_t seed) {
  std::vector<BrowseRecord> session;
  std::vector<BrowseRecord> held_out;
  if (s.session_path) {
    session = read_session(*s.session_path, s.pattern_length);
    if (s.holdout_path) held_out = read_session(*s.holdout_path, s.pattern_length);
  } else {
    DemoSession demo = make_alternating_session(s.records, s.pattern_length, seed);
    session = std::move(demo.session);
    held_out = std::move(demo.held_out);
  }

  std::vector<Detector> repertoire;
  for (const Detector& d : generate_detectors(s.detectors, s.pattern_length, seed, s.lifecycle)) {
    repertoire.push_back(make_mature_detector(d.id, d.receptor, s.lifecycle));
  }
  ReplayOptions options = s.options;
  options.seed = seed;

  ReplayReport rep;
  rep.result = replay_session(session, std::move(repertoire), s.r, s.lifecycle, options);
  for (const Detector& d : rep.result.repertoire) {
    if (d.alive()) ++rep.survivors;
  }
  rep.held_out_scores = rank_documents(held_out, rep.result.repertoire, s.r);
  rep.auc = ranking_auc(rep.held_out_scores);
  return rep;
}

std::string format_replay_report(const ReplayReport& rep) {
  std::string out;
  out += fmt::format("records: {}\n", rep.result.metrics.online_scores.size());
  out += fmt::format("influx: {}\n", rep.result.metrics.influx);
  out += fmt::format("activations: {}\n", rep.result.metrics.activations);
  out += fmt::format("tolerization_deaths: {}\n", rep.result.metrics.tolerization_deaths);
  out += fmt::format("surviving_detectors: {}\n", rep.survivors);
  out += fmt::format("held_out_documents: {}\n", rep.held_out_scores.size());
  out += fmt::format("held_out_auc: {}\n",
                     std::isnan(rep.auc) ? std::string("none") : fmt::format("{:.4f}", rep.auc));
  return out;
}

}  // namespace ais
