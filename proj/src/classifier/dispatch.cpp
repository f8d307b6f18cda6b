#include "abpipe/classifier/dispatch.hpp"

#include <algorithm>

namespace abpipe::classifier {

std::optional<std::size_t> route_class(const pipeline::PopulationSplitSpec& split,
                                       int predicted_class) {
  const std::size_t n = std::min(split.cond_stats.size(), split.sub_pipelines.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (split.cond_stats[i].matches(predicted_class)) return i;
  }
  return std::nullopt;
}

SplitAssignment dispatch(const pipeline::PopulationSplitSpec& split, const LinearModel& model,
                         std::uint64_t user_id, const FeatureVector& features) {
  SplitAssignment a;
  a.user_id = user_id;
  a.predicted_class = model.predict_class(features);
  a.target = route_class(split, a.predicted_class);
  if (a.target) a.target_subpipeline = split.sub_pipelines[*a.target].id;
  return a;
}

}  // namespace abpipe::classifier
