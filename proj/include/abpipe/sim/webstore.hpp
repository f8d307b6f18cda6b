#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "abpipe/classifier/linear_model.hpp"
#include "abpipe/orchestrator/managed_system.hpp"
#include "abpipe/sim/population.hpp"
#include "abpipe/sim/scenario.hpp"

namespace abpipe::sim {

struct ActiveTest {
  std::string test;
  std::string component;
  std::string variant_a;
  std::string variant_b;
  double fraction_a = 0.5;
  friend bool operator==(const ActiveTest&, const ActiveTest&) = default;
};

// Observable deployment state: active tests by name and the deployed split
// components.
struct DeploymentState {
  std::map<std::string, ActiveTest> active;
  std::set<std::string> split_components;
  friend bool operator==(const DeploymentState&, const DeploymentState&) = default;
};

struct MetricSnapshot {
  stats::MetricAccumulator a;
  stats::MetricAccumulator b;
};

// Simulated web-store. Users arrive uniformly at random from a fixed
// population; a test assigns each user a sticky variant and draws 0/1 metric
// samples from the user's propensities.
class WebStore final : public orchestrator::ManagedSystem {
 public:
  WebStore(ScenarioConfig cfg, std::shared_ptr<const std::vector<UserProfile>> population,
           std::shared_ptr<const classifier::LinearModel> model = nullptr);
  // Generates the population from cfg.
  explicit WebStore(ScenarioConfig cfg, std::shared_ptr<const classifier::LinearModel> model = nullptr);
  ~WebStore() override;

  const ScenarioConfig& config() const { return cfg_; }
  const std::vector<UserProfile>& population() const { return *population_; }
  void set_model(std::shared_ptr<const classifier::LinearModel> model);
  // Keep the user ids each test served (for exclusivity checks).
  void set_record_users(bool on) { record_users_ = on; }

  std::uint64_t arrival(std::uint64_t g) const override;
  std::vector<std::string> missing_variants(const pipeline::PipelineSpec& spec) const override;
  void deploy(const pipeline::ABTestSpec& test) override;
  void restore(const std::string& test) override;
  void deploy_split_component(const pipeline::PopulationSplitSpec& split) override;
  void remove_split_component(const std::string& split) override;
  std::optional<std::size_t> route(const std::string& split, std::uint64_t user) const override;
  void serve(const std::string& test, std::uint64_t user) override;
  orchestrator::Probe probe(const std::string& test) const override;
  double deploy_latency_ms() const override { return cfg_.deploy_latency_ms; }

  DeploymentState state() const;
  stats::Variant assigned_variant(const std::string& test, std::uint64_t user) const;
  std::map<std::string, MetricSnapshot> probe_metrics(const std::string& test) const;
  std::vector<std::uint64_t> served_users(const std::string& test) const;
  // Predicted class of a user under a deployed split component.
  int predicted_class(const std::string& split, std::uint64_t user) const;

 private:
  struct TestState;
  struct SplitState;

  TestState& find_state(const std::string& test) const;
  const TestState* find_any(const std::string& test) const;

  ScenarioConfig cfg_;
  std::shared_ptr<const std::vector<UserProfile>> population_;
  std::shared_ptr<const classifier::LinearModel> model_;
  bool record_users_ = false;

  mutable std::mutex mutex_;
  std::map<std::string, std::unique_ptr<TestState>> active_;
  std::map<std::string, std::unique_ptr<TestState>> finished_;
  std::map<std::string, std::string> components_;  // component -> test
  std::map<std::string, std::unique_ptr<SplitState>> splits_;
};

}  // namespace abpipe::sim
