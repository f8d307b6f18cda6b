#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "abpipe/pipeline/spec.hpp"

namespace abpipe::pipeline {

enum class ViolationKind {
  DanglingReference,
  DuplicateName,
  BadAssignmentFractions,
  InvalidTest,
  OverlappingRules,
  InvalidSplit,
  NonExclusiveSplitConditions,
  InterferingSubPipelines,
  NestedSplit,
  Cycle,
  UnreachableEnd,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string element;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  // "<kind>: <message>" per violation.
  std::vector<std::string> lines() const;
};

/// Static checks that make a pipeline executable: every name resolves in its
/// scope, tests are well formed, rules of one test never overlap, split
/// conditions are mutually exclusive, sibling sub-pipelines share no tests,
/// components or variants, and every scope is acyclic and reaches End.
ValidationReport validate(const PipelineSpec& spec);

/// Integer class values whose match pattern covers every pattern the
/// conditions can produce (each boundary value and its neighbours).
std::vector<int> representative_classes(const std::vector<SplitCondition>& conditions);

}  // namespace abpipe::pipeline
