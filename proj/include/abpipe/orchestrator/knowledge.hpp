#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abpipe/orchestrator/managed_system.hpp"
#include "abpipe/pipeline/spec.hpp"
#include "abpipe/stats/hypothesis.hpp"

namespace abpipe::orchestrator {

enum class OrchestratorErrorKind {
  MissingVariant,
  AlreadyRunning,
  InstanceCollision,
  UnknownInstance,
  ContractViolation,
  TestReentry,
  UndeclaredElement,
  Starvation,
};

class OrchestratorError : public std::runtime_error {
 public:
  OrchestratorError(OrchestratorErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  OrchestratorErrorKind kind() const noexcept { return kind_; }

 private:
  OrchestratorErrorKind kind_;
};

enum class ActionKind {
  DeployVariants,
  ConfigureRouting,
  RestoreInitial,
  DeploySplitComponent,
  RemoveSplitComponent,
  NotifyComplete,
};

std::string_view to_string(ActionKind k);

struct DeploymentAction {
  ActionKind kind;
  std::string target;
  friend bool operator==(const DeploymentAction&, const DeploymentAction&) = default;
};

// Traffic restriction of a sub-pipeline instance.
struct RoutingConfig {
  std::string split;
  std::string split_property;
  pipeline::SplitCondition condition;
  std::size_t sub_index = 0;
};

struct TestOutcome {
  std::string instance;
  std::string test;
  stats::StatResult result;
  // Global stream positions at deployment and at the final checkpoint.
  std::uint64_t start_request = 0;
  std::uint64_t end_request = 0;
  std::vector<stats::StatResult> checkpoints;

  // Requests routed to the test.
  std::uint64_t requests() const { return result.requests_consumed; }
  // Stream requests elapsed while the test ran, routed to it or not.
  std::uint64_t total_requests() const { return end_request - start_request; }
};

struct KnowledgeInstance {
  std::string id;
  std::string current_test = std::string(pipeline::kEnd);
  std::optional<RoutingConfig> routing;
  std::map<std::string, Probe> accumulators;
  std::map<std::string, TestOutcome> results;
  std::deque<DeploymentAction> planned_actions;

  // Results are write-once per key.
  void record(const std::string& key, TestOutcome outcome);
};

// Thread-safe registry of the live knowledge instances. Instances are owned by
// the repository; the pointer handed out stays valid until removal and is
// written by a single sub-pipeline only.
class KnowledgeRepository {
 public:
  KnowledgeInstance& add_instance(const std::string& id,
                                  std::optional<RoutingConfig> routing = std::nullopt);
  KnowledgeInstance remove_instance(const std::string& id);
  KnowledgeInstance* find(const std::string& id);
  const KnowledgeInstance* find(const std::string& id) const;
  bool contains(const std::string& id) const;
  std::size_t size() const;
  std::vector<std::string> ids() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<KnowledgeInstance>> instances_;
};

}  // namespace abpipe::orchestrator
