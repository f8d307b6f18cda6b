#include "abpipe/orchestrator/orchestrator.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "abpipe/format.hpp"

namespace abpipe::orchestrator {

using pipeline::ABTestSpec;
using pipeline::is_end;
using pipeline::kEnd;
using pipeline::PopulationSplitSpec;
using pipeline::TransitionRule;

bool rule_applies(const TransitionRule& rule, const stats::StatResult& result,
                  const std::string& test) {
  return test == rule.assoc_ab_test && rule.cond_stat.evaluate(result);
}

std::string next_element(const std::vector<TransitionRule>& rules, const stats::StatResult& result,
                         const std::string& test, const TransitionRule** fired) {
  if (fired) *fired = nullptr;
  for (const auto& r : rules) {
    if (rule_applies(r, result, test)) {
      if (fired) *fired = &r;
      return is_end(r.subseq_ab_test) ? std::string(kEnd) : r.subseq_ab_test;
    }
  }
  return std::string(kEnd);
}

double SplitReport::fraction(std::size_t i) const {
  const std::uint64_t w = window();
  return w == 0 ? 0.0 : static_cast<double>(dispatched[i]) / static_cast<double>(w);
}

// Walks one scope (the root pipeline or a sub-pipeline) test by test, one
// batch per step.
class ScopeRunner {
 public:
  ScopeRunner(PipelineExecution& ex, KnowledgeInstance& knowledge, std::string start,
              const std::vector<TransitionRule>& rules, const PopulationSplitSpec* split,
              std::size_t sub_index, std::uint64_t cursor)
      : knowledge_(knowledge),
        id_(knowledge.id),
        ex_(ex),
        start_(is_end(start) ? std::string(kEnd) : std::move(start)),
        rules_(rules),
        split_(split),
        sub_index_(sub_index),
        cursor_(cursor) {}

  bool done() const { return state_ == State::Done; }
  bool fresh() const { return state_ == State::Fresh || state_ == State::Resolve; }
  const PopulationSplitSpec* pending_split() const {
    return state_ == State::AtSplit ? pending_ : nullptr;
  }
  std::uint64_t cursor() const { return cursor_; }

  void resume(const std::string& next, std::uint64_t cursor) {
    current_ = is_end(next) ? std::string(kEnd) : next;
    cursor_ = cursor;
    pending_ = nullptr;
    state_ = State::Resolve;
  }

  void step() {
    switch (state_) {
      case State::Fresh:
        current_ = start_;
        knowledge_.current_test = current_;
        emit(EventKind::Start, start_);
        state_ = State::Resolve;
        return;
      case State::Resolve:
        resolve();
        return;
      case State::Running:
        run_batch();
        return;
      case State::AtSplit:
      case State::Done:
        return;
    }
  }

  std::vector<TraceEvent> events;
  KnowledgeInstance& knowledge_;

 private:
  enum class State { Fresh, Resolve, Running, AtSplit, Done };

  bool is_root() const { return split_ == nullptr; }

  void emit(EventKind kind, std::string detail) {
    events.push_back({id_, kind, std::move(detail), cursor_, ex_.knowledge_.size()});
  }

  void execute_actions() {
    while (!knowledge_.planned_actions.empty()) {
      const DeploymentAction action = knowledge_.planned_actions.front();
      switch (action.kind) {
        case ActionKind::DeployVariants:
          ex_.system_.deploy(*test_);
          ex_.deploy_count_.fetch_add(1);
          break;
        case ActionKind::RestoreInitial:
          ex_.system_.restore(action.target);
          break;
        case ActionKind::ConfigureRouting:
        case ActionKind::DeploySplitComponent:
        case ActionKind::RemoveSplitComponent:
        case ActionKind::NotifyComplete:
          // routing is part of the variant deployment; split components and
          // notifications are handled by the execution itself
          break;
      }
      knowledge_.planned_actions.pop_front();
    }
  }

  void resolve() {
    if (current_ == kEnd) {
      knowledge_.current_test = std::string(kEnd);
      if (is_root()) {
        knowledge_.planned_actions.push_back({ActionKind::NotifyComplete, knowledge_.id});
        execute_actions();
        ex_.finish_root(id_);  // invalidates knowledge_
        emit(EventKind::End, "complete");
      } else {
        emit(EventKind::End, std::string(kEnd));
      }
      state_ = State::Done;
      return;
    }
    if (const auto* split = ex_.spec_.find_split(current_)) {
      if (!is_root()) {
        throw OrchestratorError(OrchestratorErrorKind::ContractViolation,
                                "sub-pipeline '" + knowledge_.id + "' reached split '" +
                                    current_ + "'; splits cannot be nested");
      }
      pending_ = split;
      state_ = State::AtSplit;
      return;
    }
    test_ = ex_.spec_.find_test(current_);
    if (!test_) {
      throw OrchestratorError(OrchestratorErrorKind::UndeclaredElement,
                              "'" + current_ + "' is not a declared test or split");
    }
    if (knowledge_.results.contains(current_)) {
      throw OrchestratorError(OrchestratorErrorKind::TestReentry,
                              "test '" + current_ + "' was already executed by '" +
                                  knowledge_.id + "'");
    }
    knowledge_.current_test = current_;
    knowledge_.planned_actions.push_back({ActionKind::DeployVariants, current_});
    knowledge_.planned_actions.push_back({ActionKind::ConfigureRouting, current_});
    execute_actions();
    emit(EventKind::Deploy, current_);
    local_ = 0;
    start_request_ = cursor_;
    last_hit_ = cursor_;
    checkpoints_.clear();
    state_ = State::Running;
  }

  void run_batch() {
    const ABTestSpec& t = *test_;
    ManagedSystem& system = ex_.system_;
    for (;;) {
      if (ex_.abort_.load(std::memory_order_relaxed)) return;
      if (cursor_ - last_hit_ >= ex_.options_.starvation_limit) {
        throw OrchestratorError(OrchestratorErrorKind::Starvation,
                                "sub-pipeline '" + knowledge_.id + "' received no request in " +
                                    std::to_string(ex_.options_.starvation_limit) +
                                    " consecutive arrivals");
      }
      const std::uint64_t user = system.arrival(cursor_++);
      if (split_ && system.route(split_->name, user) != sub_index_) continue;
      system.serve(t.name, user);
      ++local_;
      last_hit_ = cursor_;
      if (ex_.analyzer_.is_checkpoint(t, local_) || local_ >= t.exp_length) break;
    }
    const Probe probe = system.probe(t.name);
    knowledge_.accumulators[t.name] = probe;
    stats::MonitorStep step = ex_.analyzer_.analyze(t, probe);
    step.result.test_name = t.name;
    if (step.verdict == stats::Verdict::Continue && local_ >= t.exp_length) {
      step.verdict = stats::Verdict::Inconclusive;
    }
    checkpoints_.push_back(step.result);
    emit(EventKind::BatchResult, t.name + " p_value=" + format_double(step.result.p_value) +
                                     " requests=" + std::to_string(local_));
    if (step.verdict != stats::Verdict::Continue) finish(step.result);
  }

  void finish(const stats::StatResult& result) {
    const std::string test = test_->name;
    knowledge_.planned_actions.push_back({ActionKind::RestoreInitial, test});
    execute_actions();
    TestOutcome outcome;
    outcome.instance = knowledge_.id;
    outcome.test = test;
    outcome.result = result;
    outcome.start_request = start_request_;
    outcome.end_request = cursor_;
    outcome.checkpoints = std::move(checkpoints_);
    knowledge_.record(test, std::move(outcome));

    const TransitionRule* fired = nullptr;
    const std::string next = next_element(rules_, result, test, &fired);
    emit(EventKind::Transition,
         (fired ? fired->name : std::string("<none>")) + ": " + test + " -> " + next);
    current_ = next;
    test_ = nullptr;
    state_ = State::Resolve;
  }

  const std::string id_;
  PipelineExecution& ex_;
  const std::string start_;
  const std::vector<TransitionRule>& rules_;
  const PopulationSplitSpec* split_;
  const std::size_t sub_index_;
  std::uint64_t cursor_;

  State state_ = State::Fresh;
  std::string current_;
  const ABTestSpec* test_ = nullptr;
  const PopulationSplitSpec* pending_ = nullptr;
  std::uint64_t local_ = 0;
  std::uint64_t start_request_ = 0;
  std::uint64_t last_hit_ = 0;
  std::vector<stats::StatResult> checkpoints_;
};

std::vector<KnowledgeInstance*> execute_split_entry(const PopulationSplitSpec& split,
                                                    KnowledgeRepository& knowledge,
                                                    ManagedSystem& system) {
  if (split.sub_pipelines.size() != split.cond_stats.size()) {
    throw OrchestratorError(OrchestratorErrorKind::ContractViolation,
                            "split '" + split.name + "' needs one condition per sub-pipeline");
  }
  std::vector<KnowledgeInstance*> added;
  try {
    for (std::size_t i = 0; i < split.sub_pipelines.size(); ++i) {
      const auto& sub = split.sub_pipelines[i];
      auto& inst = knowledge.add_instance(
          sub.id, RoutingConfig{split.name, split.split_property, split.cond_stats[i], i});
      inst.planned_actions.push_back({ActionKind::ConfigureRouting, sub.id});
      added.push_back(&inst);
    }
    system.deploy_split_component(split);
  } catch (...) {
    for (auto* inst : added) knowledge.remove_instance(inst->id);
    throw;
  }
  for (auto* inst : added) inst->planned_actions.clear();
  return added;
}

void execute_split_exit(const PopulationSplitSpec& split, KnowledgeRepository& knowledge,
                        ManagedSystem& system, KnowledgeInstance& root) {
  for (const auto& sub : split.sub_pipelines) {
    const auto* inst = knowledge.find(sub.id);
    if (!inst) {
      throw OrchestratorError(OrchestratorErrorKind::ContractViolation,
                              "split '" + split.name + "' exit: sub-pipeline '" + sub.id +
                                  "' was never entered");
    }
    if (!is_end(inst->current_test)) {
      throw OrchestratorError(OrchestratorErrorKind::ContractViolation,
                              "split '" + split.name + "' exit: sub-pipeline '" + sub.id +
                                  "' is still running '" + inst->current_test + "'");
    }
  }
  for (const auto& sub : split.sub_pipelines) {
    KnowledgeInstance inst = knowledge.remove_instance(sub.id);
    for (auto& [test, outcome] : inst.results) root.record(sub.id + "/" + test, std::move(outcome));
  }
  system.remove_split_component(split.name);
}

PipelineExecution::PipelineExecution(const pipeline::PipelineSpec& spec, ManagedSystem& system,
                                     Analyzer& analyzer, KnowledgeRepository& knowledge,
                                     ExecutionOptions options)
    : spec_(spec), system_(system), analyzer_(analyzer), knowledge_(knowledge), options_(options) {}

PipelineExecution::~PipelineExecution() { cleanup(); }

void PipelineExecution::setup_and_initiate() {
  if (initiated_) {
    throw OrchestratorError(OrchestratorErrorKind::AlreadyRunning,
                            "pipeline '" + spec_.name + "' was already initiated");
  }
  const auto missing = system_.missing_variants(spec_);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw OrchestratorError(OrchestratorErrorKind::MissingVariant, "missing variants: " + list);
  }
  KnowledgeInstance* root = nullptr;
  try {
    root = &knowledge_.add_instance(spec_.name);
  } catch (const OrchestratorError&) {
    throw OrchestratorError(OrchestratorErrorKind::AlreadyRunning,
                            "a pipeline named '" + spec_.name + "' is already running");
  }
  owned_.push_back(spec_.name);
  initiated_ = true;
  root_ = std::make_unique<ScopeRunner>(*this, *root, spec_.start, spec_.trans_rules, nullptr, 0,
                                        0);
  try {
    while (root_->fresh()) root_->step();
  } catch (...) {
    flush(*root_);
    cleanup();
    throw;
  }
  flush(*root_);
}

void PipelineExecution::run() {
  if (!initiated_) setup_and_initiate();
  try {
    while (!root_->done()) {
      if (const auto* split = root_->pending_split()) {
        flush(*root_);
        run_split(*split);
      } else {
        root_->step();
      }
    }
    flush(*root_);
    result_.completed = true;
  } catch (...) {
    flush(*root_);
    cleanup();
    throw;
  }
  result_.requests_total = root_->cursor();
  result_.simulated_deploy_ms =
      static_cast<double>(deploy_count_.load()) * system_.deploy_latency_ms();
}

void PipelineExecution::flush(ScopeRunner& runner) {
  for (auto& e : runner.events) result_.trace.push_back(std::move(e));
  runner.events.clear();
}

void PipelineExecution::finish_root(const std::string& id) {
  KnowledgeInstance inst = knowledge_.remove_instance(id);
  std::erase(owned_, id);
  for (auto& [key, outcome] : inst.results) result_.outcomes[key] = std::move(outcome);
}

void PipelineExecution::run_split(const PopulationSplitSpec& split) {
  const std::uint64_t entry = root_->cursor();
  auto instances = execute_split_entry(split, knowledge_, system_);
  for (const auto& sub : split.sub_pipelines) owned_.push_back(sub.id);
  deploy_count_.fetch_add(1);
  result_.trace.push_back({spec_.name, EventKind::SplitEntry, split.name, entry, knowledge_.size()});

  std::vector<std::unique_ptr<ScopeRunner>> runners;
  for (std::size_t i = 0; i < split.sub_pipelines.size(); ++i) {
    const auto& sub = split.sub_pipelines[i];
    runners.push_back(std::make_unique<ScopeRunner>(*this, *instances[i], sub.start,
                                                    sub.trans_rules, &split, i, entry));
  }
  try {
    run_sub_pipelines(runners);
  } catch (...) {
    merge(runners);
    throw;
  }
  merge(runners);

  SplitReport report;
  report.split = split.name;
  report.entry_request = entry;
  report.exit_request = entry;
  for (std::size_t i = 0; i < runners.size(); ++i) {
    report.sub_pipelines.push_back(split.sub_pipelines[i].id);
    report.sub_end_request.push_back(runners[i]->cursor());
    report.exit_request = std::max(report.exit_request, runners[i]->cursor());
  }
  report.dispatched.assign(runners.size(), 0);
  for (std::uint64_t g = report.entry_request; g < report.exit_request; ++g) {
    const auto target = system_.route(split.name, system_.arrival(g));
    if (target) {
      ++report.dispatched[*target];
    } else {
      ++report.unrouted;
    }
  }
  runners.clear();
  execute_split_exit(split, knowledge_, system_, root_->knowledge_);
  for (const auto& sub : split.sub_pipelines) std::erase(owned_, sub.id);
  result_.trace.push_back(
      {spec_.name, EventKind::SplitExit, split.name, report.exit_request, knowledge_.size()});
  root_->resume(split.next_component, report.exit_request);
  result_.splits.push_back(std::move(report));
}

void PipelineExecution::run_sub_pipelines(std::vector<std::unique_ptr<ScopeRunner>>& runners) {
  if (options_.mode == ExecutionMode::Serialized) {
    bool any = true;
    while (any) {
      any = false;
      for (auto& r : runners) {
        if (r->done()) continue;
        r->step();
        any = true;
      }
    }
    return;
  }
  std::vector<std::exception_ptr> errors(runners.size());
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < runners.size(); ++i) {
      threads.emplace_back([this, &runners, &errors, i] {
        try {
          while (!runners[i]->done() && !abort_.load()) runners[i]->step();
        } catch (...) {
          errors[i] = std::current_exception();
          abort_.store(true);
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Sub-pipeline events ordered by stream position, ties by sub-pipeline order.
void PipelineExecution::merge(std::vector<std::unique_ptr<ScopeRunner>>& runners) {
  struct Keyed {
    std::uint64_t requests;
    std::size_t runner;
    TraceEvent* event;
  };
  std::vector<Keyed> keyed;
  for (std::size_t i = 0; i < runners.size(); ++i) {
    for (auto& e : runners[i]->events) keyed.push_back({e.requests_total, i, &e});
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return a.requests != b.requests ? a.requests < b.requests : a.runner < b.runner;
  });
  for (auto& k : keyed) result_.trace.push_back(std::move(*k.event));
  for (auto& r : runners) r->events.clear();
}

void PipelineExecution::cleanup() noexcept {
  for (const auto& id : owned_) {
    try {
      KnowledgeInstance inst = knowledge_.remove_instance(id);
      for (auto& [key, outcome] : inst.results) {
        const std::string k = id == spec_.name ? key : id + "/" + key;
        result_.outcomes.emplace(k, std::move(outcome));
      }
    } catch (...) {
    }
  }
  owned_.clear();
}

ExecutionResult execute_pipeline(const pipeline::PipelineSpec& spec, ManagedSystem& system,
                                 Analyzer& analyzer, ExecutionOptions options) {
  KnowledgeRepository knowledge;
  PipelineExecution execution(spec, system, analyzer, knowledge, options);
  execution.run();
  return execution.result();
}

}  // namespace abpipe::orchestrator
