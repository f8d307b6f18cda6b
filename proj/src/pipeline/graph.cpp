#include "abpipe/pipeline/graph.hpp"

#include <algorithm>
#include <set>

namespace abpipe::pipeline {

std::size_t TransitionGraph::out_degree(const std::string& node) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [&](const GraphEdge& e) { return e.from == node; }));
}

std::size_t TransitionGraph::labeled_edge_count() const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [](const GraphEdge& e) { return !e.label.empty(); }));
}

bool TransitionGraph::has_node(const std::string& node) const {
  return std::binary_search(nodes.begin(), nodes.end(), node);
}

namespace {

std::string canonical(const std::string& name) {
  return is_end(name) ? std::string(kEnd) : name;
}

}  // namespace

TransitionGraph transition_graph(const PipelineSpec& spec) {
  TransitionGraph g;
  std::set<std::string> nodes{std::string(kStart), std::string(kEnd)};
  for (const auto& t : spec.ab_tests) nodes.insert(t.name);
  for (const auto& s : spec.pop_splits) nodes.insert(s.name);
  g.nodes.assign(nodes.begin(), nodes.end());

  g.edges.push_back({std::string(kStart), canonical(spec.start), "", ""});
  for (const auto& r : spec.trans_rules) {
    g.edges.push_back({canonical(r.assoc_ab_test), canonical(r.subseq_ab_test),
                       r.cond_stat.to_string(), r.name});
  }
  for (const auto& split : spec.pop_splits) {
    for (std::size_t i = 0; i < split.sub_pipelines.size(); ++i) {
      const auto& sub = split.sub_pipelines[i];
      const std::string label =
          i < split.cond_stats.size() ? split.cond_stats[i].to_string() : std::string("?");
      g.edges.push_back({split.name, canonical(sub.start), label, sub.id});
      for (const auto& r : sub.trans_rules) {
        const std::string to =
            is_end(r.subseq_ab_test) ? canonical(split.next_component) : r.subseq_ab_test;
        g.edges.push_back({canonical(r.assoc_ab_test), to, r.cond_stat.to_string(), r.name});
      }
    }
  }
  std::stable_sort(g.edges.begin(), g.edges.end(),
                   [](const GraphEdge& a, const GraphEdge& b) { return a.from < b.from; });
  return g;
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_dot(const TransitionGraph& graph) {
  std::string out = "digraph pipeline {\n";
  for (const auto& n : graph.nodes) {
    out += "  " + quoted(n);
    if (n == kStart || n == kEnd) out += " [shape=circle]";
    out += ";\n";
  }
  for (const auto& e : graph.edges) {
    out += "  " + quoted(e.from) + " -> " + quoted(e.to);
    if (!e.label.empty()) out += " [label=" + quoted(e.label) + "]";
    out += ";\n";
  }
  return out + "}\n";
}

}  // namespace abpipe::pipeline
