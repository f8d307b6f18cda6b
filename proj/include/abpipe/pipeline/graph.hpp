#pragma once

#include <string>
#include <vector>

#include "abpipe/pipeline/spec.hpp"

namespace abpipe::pipeline {

inline constexpr std::string_view kStart = "Start";

struct GraphEdge {
  std::string from;
  std::string to;
  // Rule condition text, "class == v" for split dispatch edges, empty for the
  // implicit Start edge.
  std::string label;
  std::string rule;
};

struct TransitionGraph {
  std::vector<std::string> nodes;  // lexicographic
  std::vector<GraphEdge> edges;    // grouped by source node, declaration order within

  std::size_t out_degree(const std::string& node) const;
  std::size_t labeled_edge_count() const;
  bool has_node(const std::string& node) const;
};

// Nodes are Start, End, every test and every split. A split has one edge per
// sub-pipeline start; rules inside a sub-pipeline that target End are drawn
// towards the split's next component.
TransitionGraph transition_graph(const PipelineSpec& spec);

std::string to_dot(const TransitionGraph& graph);

}  // namespace abpipe::pipeline
