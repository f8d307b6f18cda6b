#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace abpipe::orchestrator {

enum class EventKind { Start, Deploy, BatchResult, Transition, SplitEntry, SplitExit, End };

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct TraceEvent {
  std::string instance;
  EventKind kind = EventKind::Start;
  std::string detail;
  // Global stream position when the event happened.
  std::uint64_t requests_total = 0;
  // Live knowledge instances right after the event (not exported).
  std::size_t live_instances = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

using ExecutionTrace = std::vector<TraceEvent>;

// One {"instance","event","detail","requests_total"} object per line.
void write_trace_jsonl(std::ostream& out, const ExecutionTrace& trace);
ExecutionTrace read_trace_jsonl(std::istream& in);

// Every split_entry is closed by a split_exit of the same split on the root
// instance, and every sub-pipeline that starts in between also ends in between.
bool well_nested(const ExecutionTrace& trace, const std::string& root_instance);

}  // namespace abpipe::orchestrator
