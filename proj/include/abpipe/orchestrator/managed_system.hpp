#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abpipe/pipeline/spec.hpp"
#include "abpipe/stats/accumulator.hpp"
#include "abpipe/stats/monitor.hpp"

namespace abpipe::orchestrator {

// Hypothesis-metric snapshot of one test.
struct Probe {
  stats::MetricAccumulator a;
  stats::MetricAccumulator b;
  std::uint64_t requests = 0;

  friend bool operator==(const Probe&, const Probe&) = default;
};

// The system under adaptation, as seen by the feedback loop.
//
// route() and serve()/probe() on distinct tests may be called concurrently
// from different sub-pipelines; deployment calls are serialised by the caller
// per test but may overlap across tests.
class ManagedSystem {
 public:
  virtual ~ManagedSystem() = default;

  // User id of the g-th request of the global stream.
  virtual std::uint64_t arrival(std::uint64_t g) const = 0;
  // Variant ids referenced by `spec` that cannot be deployed.
  virtual std::vector<std::string> missing_variants(const pipeline::PipelineSpec& spec) const = 0;

  virtual void deploy(const pipeline::ABTestSpec& test) = 0;
  virtual void restore(const std::string& test) = 0;
  virtual void deploy_split_component(const pipeline::PopulationSplitSpec& split) = 0;
  virtual void remove_split_component(const std::string& split) = 0;
  // Index of the sub-pipeline the user is dispatched to, empty when unrouted.
  virtual std::optional<std::size_t> route(const std::string& split, std::uint64_t user) const = 0;

  virtual void serve(const std::string& test, std::uint64_t user) = 0;
  virtual Probe probe(const std::string& test) const = 0;

  virtual double deploy_latency_ms() const { return 0.0; }
};

// Decides, at each checkpoint, whether a running test has finished.
class Analyzer {
 public:
  virtual ~Analyzer() = default;
  virtual bool is_checkpoint(const pipeline::ABTestSpec& test, std::uint64_t requests) const = 0;
  virtual stats::MonitorStep analyze(const pipeline::ABTestSpec& test, const Probe& probe) = 0;
};

// Sequential monitoring with a fixed batch size.
class MonitorAnalyzer final : public Analyzer {
 public:
  explicit MonitorAnalyzer(std::uint64_t batch_size = stats::kDefaultBatchSize);

  bool is_checkpoint(const pipeline::ABTestSpec& test, std::uint64_t requests) const override;
  stats::MonitorStep analyze(const pipeline::ABTestSpec& test, const Probe& probe) override;

  static stats::MonitorConfig config_for(const pipeline::ABTestSpec& test,
                                         std::uint64_t batch_size);

 private:
  std::uint64_t batch_size_;
};

}  // namespace abpipe::orchestrator
