#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "abpipe/pipeline/condition.hpp"
#include "abpipe/stats/hypothesis.hpp"

namespace abpipe::pipeline {

// Distinguished terminal element. Blueprints may spell it "End" or "end".
inline constexpr std::string_view kEnd = "End";
bool is_end(std::string_view name);

struct Assignment {
  double a = 0.5;
  double b = 0.5;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct Hypothesis {
  std::string metric;
  stats::Direction direction = stats::Direction::BGreater;
  double alpha = 0.05;
  friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

struct ABTestSpec {
  std::string name;
  // Managed-system component whose variants this test swaps in.
  std::string component;
  // Maximum number of routed requests.
  std::uint64_t exp_length = 1;
  Assignment ab_assignment;
  Hypothesis hypothesis;
  std::vector<std::string> ab_metrics;
  stats::StatTestKind stat_test = stats::StatTestKind::WelchT;
  std::string variant_a;
  std::string variant_b;

  friend bool operator==(const ABTestSpec&, const ABTestSpec&) = default;
};

struct TransitionRule {
  std::string name;
  std::string assoc_ab_test;
  Condition cond_stat;
  std::string subseq_ab_test;

  friend bool operator==(const TransitionRule&, const TransitionRule&) = default;
};

struct SubPipeline {
  std::string id;
  std::string start;
  std::vector<std::string> ab_tests;
  std::vector<TransitionRule> trans_rules;

  friend bool operator==(const SubPipeline&, const SubPipeline&) = default;
};

// Class-match condition of a population split, e.g. {"==", 0}.
struct SplitCondition {
  CompareOp op = CompareOp::Eq;
  int value = 0;

  bool matches(int predicted_class) const;
  std::string to_string() const;
  friend bool operator==(const SplitCondition&, const SplitCondition&) = default;
};

struct SplitComponent {
  std::string service_name;
  std::string image_name;
  friend bool operator==(const SplitComponent&, const SplitComponent&) = default;
};

struct PopulationSplitSpec {
  std::string name;
  std::string split_property;
  std::vector<SubPipeline> sub_pipelines;
  std::vector<SplitCondition> cond_stats;  // parallel to sub_pipelines
  std::string next_component = std::string(kEnd);
  SplitComponent split_component;

  const SubPipeline* find_sub_pipeline(std::string_view id) const;
  friend bool operator==(const PopulationSplitSpec&, const PopulationSplitSpec&) = default;
};

enum class ElementKind { Test, Split, End, Unknown };

struct PipelineSpec {
  std::string name;
  // Every declared test, including those owned by sub-pipelines.
  std::vector<ABTestSpec> ab_tests;
  // Root-level rules, in declaration order.
  std::vector<TransitionRule> trans_rules;
  std::vector<PopulationSplitSpec> pop_splits;
  std::string start = std::string(kEnd);

  const ABTestSpec* find_test(std::string_view name) const;
  const PopulationSplitSpec* find_split(std::string_view name) const;
  ElementKind kind_of(std::string_view name) const;
  // Tests not owned by any sub-pipeline, in declaration order.
  std::vector<std::string> root_test_names() const;

  friend bool operator==(const PipelineSpec&, const PipelineSpec&) = default;
};

// Equality ignoring the declaration order of tests, splits and sub-pipeline
// test lists. Rule order is significant (first match wins) and is compared as is.
bool semantically_equal(const PipelineSpec& a, const PipelineSpec& b);

}  // namespace abpipe::pipeline
