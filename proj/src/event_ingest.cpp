#include "ais/event_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "ais/errors.hpp"
#include "ais/text_util.hpp"

namespace ais {

namespace {

constexpr std::string_view kFieldNames[] = {"time",     "source_id", "kind",
                                            "value",    "pattern",   "resources",
                                            "engine_initiated"};

bool valid_identifier(std::string_view s) {
  if (s.empty() || s == "-") return false;
  return std::none_of(s.begin(), s.end(), [](char c) {
    return c == '\t' || c == ',' || c == ' ' || c == '\r' || c == '\n';
  });
}

HostEvent parse_record(std::string_view line, std::size_t line_no) {
  const auto fields = text::split(line, '\t');
  if (fields.size() != std::size(kFieldNames)) {
    throw DataError(line_no, "record",
                    "expected 7 tab-separated fields, got " + std::to_string(fields.size()));
  }
  HostEvent e;

  auto time = text::to_double(fields[0]);
  if (!time || *time < 0.0) throw DataError(line_no, "time", "not a non-negative number");
  e.time = *time;

  if (!valid_identifier(fields[1])) throw DataError(line_no, "source_id", "invalid identifier");
  e.source_id = std::string(fields[1]);

  auto kind = parse_event_kind(fields[2]);
  if (!kind) throw DataError(line_no, "kind", "unknown kind '" + std::string(fields[2]) + "'");
  e.kind = *kind;

  auto value = text::to_double(fields[3]);
  if (!value) throw DataError(line_no, "value", "not a number");
  e.value = *value;

  if (fields[4] != "-") {
    try {
      e.pattern = Pattern::parse(fields[4]);
    } catch (const ConfigError& err) {
      throw DataError(line_no, "pattern", err.what());
    }
  } else if (e.kind == EventKind::Connection) {
    throw DataError(line_no, "pattern", "CONNECTION events require a pattern");
  }

  if (fields[5] != "-") {
    for (std::string_view r : text::split(fields[5], ',')) {
      if (!valid_identifier(r)) throw DataError(line_no, "resources", "invalid resource id");
      e.resources.emplace(r);
    }
  }

  if (fields[6] == "1") {
    e.engine_initiated = true;
  } else if (fields[6] != "0") {
    throw DataError(line_no, "engine_initiated", "expected 0 or 1");
  }
  return e;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::MetricMem: return "METRIC_MEM";
    case EventKind::MetricDisk: return "METRIC_DISK";
    case EventKind::FileChange: return "FILE_CHANGE";
    case EventKind::ProcTerm: return "PROC_TERM";
    case EventKind::Connection: return "CONNECTION";
    case EventKind::Heartbeat: return "HEARTBEAT";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (EventKind k : {EventKind::MetricMem, EventKind::MetricDisk, EventKind::FileChange,
                      EventKind::ProcTerm, EventKind::Connection, EventKind::Heartbeat}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::vector<HostEvent> parse_event_log(std::istream& in) {
  std::vector<HostEvent> events;
  std::string raw;
  std::size_t line_no = 0;
  int pattern_length = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("#schema=") && line != kEventSchemaHeader) {
        throw DataError(line_no, "schema", "unsupported schema '" + std::string(line) + "'");
      }
      continue;
    }
    HostEvent e = parse_record(line, line_no);
    if (!events.empty() && e.time < events.back().time) {
      throw DataError(line_no, "time", "timestamp " + format_number(e.time) +
                                           " precedes previous " +
                                           format_number(events.back().time));
    }
    if (e.pattern) {
      if (pattern_length == 0) pattern_length = e.pattern->length();
      if (e.pattern->length() != pattern_length) {
        throw DataError(line_no, "pattern",
                        "length " + std::to_string(e.pattern->length()) +
                            " differs from log pattern length " + std::to_string(pattern_length));
      }
    }
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<HostEvent> parse_event_log(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_event_log(in);
}

std::string format_event(const HostEvent& e) {
  std::string out;
  out += format_number(e.time);
  out += '\t';
  out += e.source_id;
  out += '\t';
  out += to_string(e.kind);
  out += '\t';
  out += format_number(e.value);
  out += '\t';
  out += e.pattern ? e.pattern->to_string() : "-";
  out += '\t';
  if (e.resources.empty()) {
    out += '-';
  } else {
    bool first = true;
    for (const auto& r : e.resources) {
      if (!first) out += ',';
      out += r;
      first = false;
    }
  }
  out += '\t';
  out += e.engine_initiated ? '1' : '0';
  return out;
}

void write_event_log(std::ostream& out, const std::vector<HostEvent>& events) {
  out << kEventSchemaHeader << '\n';
  for (const auto& e : events) out << format_event(e) << '\n';
}

std::string serialize_event_log(const std::vector<HostEvent>& events) {
  std::ostringstream out;
  write_event_log(out, events);
  return out.str();
}

LabelTable parse_label_table(std::istream& in) {
  LabelTable labels;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2) throw DataError(line_no, "record", "expected source_id<TAB>label");
    if (!valid_identifier(fields[0])) throw DataError(line_no, "source_id", "invalid identifier");
    Label label;
    if (fields[1] == "SELF") {
      label = Label::Self;
    } else if (fields[1] == "NONSELF") {
      label = Label::NonSelf;
    } else {
      throw DataError(line_no, "label", "expected SELF or NONSELF");
    }
    if (!labels.emplace(std::string(fields[0]), label).second) {
      throw DataError(line_no, "source_id", "duplicate label for '" + std::string(fields[0]) + "'");
    }
  }
  return labels;
}

LabelTable parse_label_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_label_table(in);
}

void write_label_table(std::ostream& out, const LabelTable& labels) {
  for (const auto& [source, label] : labels) out << source << '\t' << to_string(label) << '\n';
}

void SourceRegistry::observe(const HostEvent& e) {
  auto [it, inserted] = sources_.try_emplace(e.source_id);
  Source& s = it->second;
  if (inserted) s.first_seen = e.time;
  s.last_seen = std::max(s.last_seen, e.time);
  s.resources.insert(e.resources.begin(), e.resources.end());
}

const SourceRegistry::Source* SourceRegistry::find(const std::string& source_id) const {
  auto it = sources_.find(source_id);
  return it == sources_.end() ? nullptr : &it->second;
}

std::vector<Antigen> antigens_from_events(const std::vector<HostEvent>& events,
                                          const LabelTable* labels) {
  SourceRegistry registry;
  std::map<std::pair<std::string, Pattern>, Antigen> by_key;
  std::vector<std::pair<std::string, Pattern>> order;
  for (const auto& e : events) {
    if (e.engine_initiated) continue;
    registry.observe(e);
    if (!e.pattern) continue;
    auto key = std::make_pair(e.source_id, *e.pattern);
    auto [it, inserted] = by_key.try_emplace(key);
    if (inserted) {
      it->second.pattern = *e.pattern;
      it->second.source_id = e.source_id;
      it->second.active_from = e.time;
      order.push_back(key);
    }
    it->second.active_to = e.time;
  }
  std::vector<Antigen> out;
  out.reserve(order.size());
  for (const auto& key : order) {
    Antigen a = by_key.at(key);
    const auto* src = registry.find(a.source_id);
    a.start_time = src->first_seen;
    a.resources = src->resources;
    if (labels) {
      auto it = labels->find(a.source_id);
      if (it != labels->end()) a.truth_label = it->second;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace ais
