#include "abpipe/orchestrator/trace.hpp"

#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

namespace abpipe::orchestrator {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Start:
      return "start";
    case EventKind::Deploy:
      return "deploy";
    case EventKind::BatchResult:
      return "batch_result";
    case EventKind::Transition:
      return "transition";
    case EventKind::SplitEntry:
      return "split_entry";
    case EventKind::SplitExit:
      return "split_exit";
    case EventKind::End:
      return "end";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (auto k : {EventKind::Start, EventKind::Deploy, EventKind::BatchResult,
                 EventKind::Transition, EventKind::SplitEntry, EventKind::SplitExit,
                 EventKind::End}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void write_trace_jsonl(std::ostream& out, const ExecutionTrace& trace) {
  for (const auto& e : trace) {
    nlohmann::ordered_json j;
    j["instance"] = e.instance;
    j["event"] = std::string(to_string(e.kind));
    j["detail"] = e.detail;
    j["requests_total"] = e.requests_total;
    out << j.dump() << '\n';
  }
}

ExecutionTrace read_trace_jsonl(std::istream& in) {
  ExecutionTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    TraceEvent e;
    e.instance = j.at("instance").get<std::string>();
    const auto kind = parse_event_kind(j.at("event").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown trace event '" + line + "'");
    e.kind = *kind;
    e.detail = j.at("detail").get<std::string>();
    e.requests_total = j.at("requests_total").get<std::uint64_t>();
    trace.push_back(std::move(e));
  }
  return trace;
}

bool well_nested(const ExecutionTrace& trace, const std::string& root_instance) {
  std::optional<std::string> open_split;
  std::set<std::string> started, ended;
  for (const auto& e : trace) {
    if (e.instance == root_instance) {
      if (e.kind == EventKind::SplitEntry) {
        if (open_split) return false;
        open_split = e.detail;
        started.clear();
        ended.clear();
      } else if (e.kind == EventKind::SplitExit) {
        if (!open_split || *open_split != e.detail || started != ended || started.empty()) {
          return false;
        }
        open_split.reset();
      } else if (open_split) {
        return false;  // the root is quiescent while a split is active
      }
      continue;
    }
    if (!open_split) return false;
    if (e.kind == EventKind::Start) {
      if (!started.insert(e.instance).second) return false;
    } else if (!started.contains(e.instance) || ended.contains(e.instance)) {
      return false;
    }
    if (e.kind == EventKind::End) ended.insert(e.instance);
  }
  return !open_split;
}

}  // namespace abpipe::orchestrator
