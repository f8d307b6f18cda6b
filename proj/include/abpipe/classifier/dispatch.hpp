#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "abpipe/classifier/linear_model.hpp"
#include "abpipe/pipeline/spec.hpp"

namespace abpipe::classifier {

struct SplitAssignment {
  std::uint64_t user_id = 0;
  int predicted_class = 0;
  // Index into split.sub_pipelines; empty when no condition matches.
  std::optional<std::size_t> target;
  std::string target_subpipeline;

  bool routed() const { return target.has_value(); }
};

// First sub-pipeline whose condition accepts `predicted_class`.
std::optional<std::size_t> route_class(const pipeline::PopulationSplitSpec& split,
                                       int predicted_class);

SplitAssignment dispatch(const pipeline::PopulationSplitSpec& split, const LinearModel& model,
                         std::uint64_t user_id, const FeatureVector& features);

}  // namespace abpipe::classifier
