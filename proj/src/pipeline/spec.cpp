#include "abpipe/pipeline/spec.hpp"

#include <algorithm>
#include <set>

namespace abpipe::pipeline {

bool is_end(std::string_view name) { return name == "End" || name == "end"; }

bool SplitCondition::matches(int predicted_class) const {
  return compare(static_cast<double>(predicted_class), op, static_cast<double>(value));
}

std::string SplitCondition::to_string() const {
  return "class " + std::string(pipeline::to_string(op)) + " " + std::to_string(value);
}

const SubPipeline* PopulationSplitSpec::find_sub_pipeline(std::string_view id) const {
  for (const auto& s : sub_pipelines) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const ABTestSpec* PipelineSpec::find_test(std::string_view name) const {
  for (const auto& t : ab_tests) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const PopulationSplitSpec* PipelineSpec::find_split(std::string_view name) const {
  for (const auto& s : pop_splits) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

ElementKind PipelineSpec::kind_of(std::string_view name) const {
  if (is_end(name)) return ElementKind::End;
  if (find_test(name)) return ElementKind::Test;
  if (find_split(name)) return ElementKind::Split;
  return ElementKind::Unknown;
}

std::vector<std::string> PipelineSpec::root_test_names() const {
  std::set<std::string> owned;
  for (const auto& split : pop_splits) {
    for (const auto& sub : split.sub_pipelines) owned.insert(sub.ab_tests.begin(), sub.ab_tests.end());
  }
  std::vector<std::string> out;
  for (const auto& t : ab_tests) {
    if (!owned.contains(t.name)) out.push_back(t.name);
  }
  return out;
}

namespace {

template <typename T, typename Key>
std::vector<T> sorted_by(std::vector<T> v, Key key) {
  std::sort(v.begin(), v.end(), [&](const T& x, const T& y) { return key(x) < key(y); });
  return v;
}

}  // namespace

bool semantically_equal(const PipelineSpec& a, const PipelineSpec& b) {
  auto normalise = [](PipelineSpec s) {
    s.ab_tests = sorted_by(std::move(s.ab_tests), [](const ABTestSpec& t) { return t.name; });
    s.pop_splits =
        sorted_by(std::move(s.pop_splits), [](const PopulationSplitSpec& p) { return p.name; });
    for (auto& split : s.pop_splits) {
      if (is_end(split.next_component)) split.next_component = std::string(kEnd);
      for (auto& sub : split.sub_pipelines) {
        std::sort(sub.ab_tests.begin(), sub.ab_tests.end());
        for (auto& r : sub.trans_rules) {
          if (is_end(r.subseq_ab_test)) r.subseq_ab_test = std::string(kEnd);
        }
      }
    }
    for (auto& r : s.trans_rules) {
      if (is_end(r.subseq_ab_test)) r.subseq_ab_test = std::string(kEnd);
    }
    if (is_end(s.start)) s.start = std::string(kEnd);
    return s;
  };
  return normalise(a) == normalise(b);
}

}  // namespace abpipe::pipeline
