#pragma once

// Independent reference for pipeline execution traces. Walks the rule-selection
// and split entry/exit algorithms directly over scripted test outcomes and a
// scripted managed system. Shares no code with the engine beyond the pipeline types.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "abpipe/orchestrator/managed_system.hpp"
#include "abpipe/orchestrator/trace.hpp"
#include "abpipe/pipeline/spec.hpp"

namespace refimpl {

using abpipe::orchestrator::EventKind;
using abpipe::orchestrator::ExecutionTrace;
using abpipe::orchestrator::TraceEvent;
namespace pl = abpipe::pipeline;

inline constexpr std::uint64_t kBatch = 10;
inline constexpr std::uint64_t kUsers = 997;

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t arrival(std::uint64_t salt, std::uint64_t g) { return mix(salt ^ mix(g)) % kUsers; }

// Outcome of one test: k checkpoints, the last one final.
struct Outcome {
  int checkpoints = 1;
  double p = 0.5;
  std::string p_text = "0.5";
  double effect = 0.0;
};

// Conditions with a hand-written evaluator next to their text.
struct CondEntry {
  const char* text;
  bool (*holds)(double p, double effect);
};

inline const std::vector<CondEntry>& condition_menu() {
  static const std::vector<CondEntry> menu = {
      {"p_value >= 0", [](double, double) { return true; }},
      {"p_value <= 0.05", [](double p, double) { return p <= 0.05; }},
      {"p_value > 0.05", [](double p, double) { return p > 0.05; }},
      {"p_value <= 0.05 and effect > 0", [](double p, double e) { return p <= 0.05 && e > 0; }},
      {"p_value > 0.05 or effect <= 0", [](double p, double e) { return p > 0.05 || e <= 0; }},
      {"effect > 0", [](double, double e) { return e > 0; }},
      {"effect <= 0", [](double, double e) { return e <= 0; }},
  };
  return menu;
}

struct Case {
  pl::PipelineSpec spec;
  std::map<std::string, Outcome> outcomes;
  std::map<std::string, int> rule_condition;  // rule name -> menu index
  std::uint64_t salt = 0;
};

inline pl::ABTestSpec make_test(const std::string& name) {
  pl::ABTestSpec t;
  t.name = name;
  t.component = "component-" + name;
  t.exp_length = 1'000'000;
  t.hypothesis.metric = "m";
  t.ab_metrics = {"m"};
  t.variant_a = name + "-a";
  t.variant_b = name + "-b";
  return t;
}

// Random small pipeline: at most four tests and at most one split. Some cases
// are invalid on purpose (overlapping rules, cycles); callers keep the ones
// that validate.
inline Case random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  static const std::vector<std::vector<int>> rule_sets = {
      {0}, {1, 2}, {2, 1}, {1}, {3, 4}, {4, 3}, {3}, {5, 6}, {}, {0, 1}, {5}};
  static const std::vector<std::pair<double, const char*>> finals = {
      {0.01, "0.01"}, {0.04, "0.04"}, {0.2, "0.2"}, {0.7, "0.7"}};

  Case c;
  c.salt = mix(seed);
  c.spec.name = "P" + std::to_string(seed);
  const bool with_split = pick(3) != 0;
  const std::size_t n_subs = with_split ? 2 + pick(2) : 0;
  const std::size_t max_root = 4 - n_subs;  // 4 when there is no split
  const std::size_t n_root = 1 + pick(max_root);
  int counter = 0;
  auto new_test = [&]() {
    const std::string name = "T" + std::to_string(++counter);
    c.spec.ab_tests.push_back(make_test(name));
    Outcome o;
    o.checkpoints = 1 + static_cast<int>(pick(3));
    const auto& f = finals[pick(finals.size())];
    o.p = f.first;
    o.p_text = f.second;
    o.effect = pick(2) ? 0.02 : -0.02;
    c.outcomes[name] = o;
    return name;
  };
  auto add_rules = [&](const std::string& test, const std::vector<std::string>& targets,
                       std::vector<pl::TransitionRule>& out) {
    const auto& set = rule_sets[pick(rule_sets.size())];
    for (std::size_t i = 0; i < set.size(); ++i) {
      pl::TransitionRule r;
      r.name = "r-" + test + "-" + std::to_string(i);
      r.assoc_ab_test = test;
      r.cond_stat = pl::Condition::parse(condition_menu()[set[i]].text);
      r.subseq_ab_test = targets[pick(targets.size())];
      c.rule_condition[r.name] = set[i];
      out.push_back(r);
    }
  };

  // Root nodes in execution order; rules normally point forward.
  std::vector<std::string> nodes;
  for (std::size_t i = 0; i < n_root; ++i) nodes.push_back(new_test());
  const std::string split_name = "Split";
  if (with_split) nodes.insert(nodes.begin() + static_cast<long>(pick(nodes.size() + 1)), split_name);

  if (with_split) {
    pl::PopulationSplitSpec split;
    split.name = split_name;
    split.split_property = "segment";
    for (std::size_t s = 0; s < n_subs; ++s) {
      pl::SubPipeline sub;
      sub.id = "S" + std::to_string(s);
      // at most four tests overall, at least one per sub-pipeline
      const std::size_t spare = 4 - static_cast<std::size_t>(counter) - (n_subs - s - 1);
      const std::size_t n_sub_tests = (spare >= 2 && pick(3) == 0) ? 2 : 1;
      std::vector<std::string> sub_tests;
      for (std::size_t k = 0; k < n_sub_tests; ++k) sub_tests.push_back(new_test());
      sub.start = sub_tests.front();
      sub.ab_tests = sub_tests;
      for (std::size_t k = 0; k < sub_tests.size(); ++k) {
        std::vector<std::string> targets = {"End"};
        for (std::size_t j = k + 1; j < sub_tests.size(); ++j) targets.push_back(sub_tests[j]);
        add_rules(sub_tests[k], targets, sub.trans_rules);
      }
      split.sub_pipelines.push_back(sub);
      split.cond_stats.push_back({pl::CompareOp::Eq, static_cast<int>(s)});
    }
    const auto pos = std::find(nodes.begin(), nodes.end(), split_name) - nodes.begin();
    std::vector<std::string> after = {"End"};
    for (std::size_t j = pos + 1; j < nodes.size(); ++j) after.push_back(nodes[j]);
    split.next_component = after[pick(after.size())];
    c.spec.pop_splits.push_back(split);
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == split_name) continue;
    std::vector<std::string> targets = {"End"};
    for (std::size_t j = i + 1; j < nodes.size(); ++j) targets.push_back(nodes[j]);
    if (pick(10) == 0) targets.push_back(nodes[pick(nodes.size())]);  // possible cycle
    add_rules(nodes[i], targets, c.spec.trans_rules);
  }
  c.spec.start = nodes.front();
  return c;
}

// Managed system answering from the script: fixed arrivals, class = user % subs.
class ScriptedSystem final : public abpipe::orchestrator::ManagedSystem {
 public:
  explicit ScriptedSystem(const Case& c) : case_(c) {
    for (const auto& t : c.spec.ab_tests) served_[t.name] = std::make_unique<std::atomic<std::uint64_t>>(0);
  }
  std::uint64_t arrival(std::uint64_t g) const override { return refimpl::arrival(case_.salt, g); }
  std::vector<std::string> missing_variants(const pl::PipelineSpec&) const override { return {}; }
  void deploy(const pl::ABTestSpec&) override {}
  void restore(const std::string&) override {}
  void deploy_split_component(const pl::PopulationSplitSpec&) override {}
  void remove_split_component(const std::string&) override {}
  std::optional<std::size_t> route(const std::string& split, std::uint64_t user) const override {
    return user % case_.spec.find_split(split)->sub_pipelines.size();
  }
  void serve(const std::string& test, std::uint64_t) override { served_.at(test)->fetch_add(1); }
  abpipe::orchestrator::Probe probe(const std::string& test) const override {
    abpipe::orchestrator::Probe p;
    p.requests = served_.at(test)->load();
    return p;
  }

 private:
  const Case& case_;
  std::map<std::string, std::unique_ptr<std::atomic<std::uint64_t>>> served_;
};

class ScriptedAnalyzer final : public abpipe::orchestrator::Analyzer {
 public:
  explicit ScriptedAnalyzer(const Case& c) : case_(c) {}
  bool is_checkpoint(const pl::ABTestSpec&, std::uint64_t requests) const override {
    return requests % kBatch == 0;
  }
  abpipe::stats::MonitorStep analyze(const pl::ABTestSpec& test,
                                     const abpipe::orchestrator::Probe& probe) override {
    const Outcome& o = case_.outcomes.at(test.name);
    const auto k = static_cast<int>(probe.requests / kBatch);
    abpipe::stats::MonitorStep step;
    step.result.mean_a = 0.1;
    step.result.mean_b = 0.1 + o.effect;
    step.result.requests_consumed = probe.requests;
    if (k < o.checkpoints) {
      step.result.p_value = 0.5;
      step.verdict = abpipe::stats::Verdict::Continue;
      return step;
    }
    step.result.p_value = o.p;
    step.result.significant = o.p <= test.hypothesis.alpha;
    step.verdict = step.result.significant ? abpipe::stats::Verdict::Significant
                                           : abpipe::stats::Verdict::Inconclusive;
    return step;
  }

 private:
  const Case& case_;
};

// Walks one scope and appends its events. Returns the cursor at its End.
inline std::uint64_t walk_scope(const Case& c, const std::string& instance, const std::string& start,
                                const std::vector<pl::TransitionRule>& rules, long sub_index,
                                std::size_t n_subs, std::uint64_t cursor, std::size_t live,
                                ExecutionTrace& out, std::string* stopped_at_split) {
  auto emit = [&](EventKind k, std::string detail) {
    out.push_back({instance, k, std::move(detail), cursor, live});
  };
  std::string current = pl::is_end(start) ? "End" : start;
  emit(EventKind::Start, current);
  while (current != "End") {
    if (c.spec.find_split(current)) {
      *stopped_at_split = current;
      return cursor;
    }
    emit(EventKind::Deploy, current);
    const Outcome& o = c.outcomes.at(current);
    std::uint64_t local = 0;
    for (int j = 1; j <= o.checkpoints; ++j) {
      while (local < static_cast<std::uint64_t>(j) * kBatch) {
        const std::uint64_t user = arrival(c.salt, cursor++);
        if (sub_index >= 0 && static_cast<long>(user % n_subs) != sub_index) continue;
        ++local;
      }
      const std::string p = j < o.checkpoints ? "0.5" : o.p_text;
      emit(EventKind::BatchResult, current + " p_value=" + p + " requests=" + std::to_string(local));
    }
    std::string next = "End";
    std::string fired = "<none>";
    for (const auto& r : rules) {
      if (r.assoc_ab_test != current) continue;
      if (!condition_menu()[c.rule_condition.at(r.name)].holds(o.p, o.effect)) continue;
      fired = r.name;
      next = pl::is_end(r.subseq_ab_test) ? "End" : r.subseq_ab_test;
      break;
    }
    emit(EventKind::Transition, fired + ": " + current + " -> " + next);
    current = next;
  }
  return cursor;
}

// Reference trace of a whole run, live instance counts included.
inline ExecutionTrace reference_trace(const Case& c) {
  ExecutionTrace out;
  const std::string root = c.spec.name;
  std::uint64_t cursor = 0;
  std::string start = c.spec.start;
  bool first = true;
  for (;;) {
    std::string at_split;
    ExecutionTrace scope;
    cursor = walk_scope(c, root, start, c.spec.trans_rules, -1, 0, cursor, 1, scope, &at_split);
    // a resumed scope does not emit a second start event
    out.insert(out.end(), scope.begin() + (first ? 0 : 1), scope.end());
    first = false;
    if (at_split.empty()) {
      out.push_back({root, EventKind::End, "complete", cursor, 0});
      return out;
    }
    const pl::PopulationSplitSpec& split = *c.spec.find_split(at_split);
    const std::size_t n = split.sub_pipelines.size();
    out.push_back({root, EventKind::SplitEntry, split.name, cursor, 1 + n});
    std::vector<std::pair<std::size_t, TraceEvent>> sub_events;
    std::uint64_t exit = cursor;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& sub = split.sub_pipelines[i];
      ExecutionTrace events;
      std::string nested;
      const std::uint64_t end = walk_scope(c, sub.id, sub.start, sub.trans_rules,
                                           static_cast<long>(i), n, cursor, 1 + n, events, &nested);
      events.push_back({sub.id, EventKind::End, "End", end, 1 + n});
      exit = std::max(exit, end);
      for (auto& e : events) sub_events.emplace_back(i, e);
    }
    std::stable_sort(sub_events.begin(), sub_events.end(), [](const auto& a, const auto& b) {
      if (a.second.requests_total != b.second.requests_total)
        return a.second.requests_total < b.second.requests_total;
      return a.first < b.first;
    });
    for (auto& [i, e] : sub_events) out.push_back(e);
    out.push_back({root, EventKind::SplitExit, split.name, exit, 1});
    cursor = exit;
    start = split.next_component;
  }
}

}  // namespace refimpl
