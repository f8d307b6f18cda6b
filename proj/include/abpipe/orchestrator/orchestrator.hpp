#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "abpipe/orchestrator/knowledge.hpp"
#include "abpipe/orchestrator/managed_system.hpp"
#include "abpipe/orchestrator/trace.hpp"
#include "abpipe/pipeline/spec.hpp"

namespace abpipe::orchestrator {

// True iff `test` is the rule's associated test and its condition holds.
bool rule_applies(const pipeline::TransitionRule& rule, const stats::StatResult& result,
                  const std::string& test);

// Target of the first rule that applies, End when none does. `fired` receives
// the rule, or nullptr.
std::string next_element(const std::vector<pipeline::TransitionRule>& rules,
                         const stats::StatResult& result, const std::string& test,
                         const pipeline::TransitionRule** fired = nullptr);

enum class ExecutionMode {
  // Sub-pipelines advance one batch at a time in fixed round-robin order.
  Serialized,
  // One thread per sub-pipeline.
  Threads,
};

struct ExecutionOptions {
  ExecutionMode mode = ExecutionMode::Serialized;
  // Consecutive stream requests a sub-pipeline may go without traffic.
  std::uint64_t starvation_limit = 10'000'000;
};

struct SplitReport {
  std::string split;
  std::vector<std::string> sub_pipelines;
  std::uint64_t entry_request = 0;
  std::uint64_t exit_request = 0;
  // Global position at which each sub-pipeline reached End.
  std::vector<std::uint64_t> sub_end_request;
  // Stream requests in [entry, exit) dispatched to each sub-pipeline.
  std::vector<std::uint64_t> dispatched;
  std::uint64_t unrouted = 0;

  std::uint64_t window() const { return exit_request - entry_request; }
  double fraction(std::size_t i) const;
  // Requests from split entry until sub-pipeline i finished.
  std::uint64_t sub_total(std::size_t i) const { return sub_end_request[i] - entry_request; }
};

struct ExecutionResult {
  ExecutionTrace trace;
  // Root tests by name, sub-pipeline tests as "subpl_id/test".
  std::map<std::string, TestOutcome> outcomes;
  std::vector<SplitReport> splits;
  std::uint64_t requests_total = 0;
  double simulated_deploy_ms = 0.0;
  bool completed = false;
};

/// Split entry: one knowledge instance per sub-pipeline restricted to its
/// class condition, then the split component. Rolls back on failure.
std::vector<KnowledgeInstance*> execute_split_entry(const pipeline::PopulationSplitSpec& split,
                                                    KnowledgeRepository& knowledge,
                                                    ManagedSystem& system);

/// Split exit: requires every sub-pipeline at End, copies their results
/// into `root` as "subpl_id/test", removes the instances and the split component.
void execute_split_exit(const pipeline::PopulationSplitSpec& split,
                        KnowledgeRepository& knowledge, ManagedSystem& system,
                        KnowledgeInstance& root);

class ScopeRunner;

/// One pipeline run driven through the monitor / analyze / plan / execute loop.
class PipelineExecution {
 public:
  PipelineExecution(const pipeline::PipelineSpec& spec, ManagedSystem& system, Analyzer& analyzer,
                    KnowledgeRepository& knowledge, ExecutionOptions options = {});
  ~PipelineExecution();
  PipelineExecution(const PipelineExecution&) = delete;
  PipelineExecution& operator=(const PipelineExecution&) = delete;

  // Checks variants, creates the root instance and deploys the first element.
  void setup_and_initiate();
  // Runs to End. On error the trace so far stays available through result().
  void run();

  const ExecutionResult& result() const { return result_; }

 private:
  friend class ScopeRunner;

  void flush(ScopeRunner& runner);
  void run_split(const pipeline::PopulationSplitSpec& split);
  void run_sub_pipelines(std::vector<std::unique_ptr<ScopeRunner>>& runners);
  void merge(std::vector<std::unique_ptr<ScopeRunner>>& runners);
  void cleanup() noexcept;
  void finish_root(const std::string& id);

  const pipeline::PipelineSpec& spec_;
  ManagedSystem& system_;
  Analyzer& analyzer_;
  KnowledgeRepository& knowledge_;
  ExecutionOptions options_;
  ExecutionResult result_;
  std::unique_ptr<ScopeRunner> root_;
  std::atomic<bool> abort_{false};
  std::atomic<std::uint64_t> deploy_count_{0};
  bool initiated_ = false;
  // Knowledge instances created by this execution and still live.
  std::vector<std::string> owned_;
};

ExecutionResult execute_pipeline(const pipeline::PipelineSpec& spec, ManagedSystem& system,
                                 Analyzer& analyzer, ExecutionOptions options = {});

}  // namespace abpipe::orchestrator
