#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abpipe/classifier/linear_model.hpp"
#include "abpipe/orchestrator/orchestrator.hpp"
#include "abpipe/pipeline/spec.hpp"
#include "abpipe/sim/scenario.hpp"
#include "abpipe/sim/webstore.hpp"

namespace abpipe::cli {

// Batch size from ABPIPE_BATCH_SIZE, 1000 when unset. Throws std::invalid_argument
// on a malformed value.
std::uint64_t batch_size_from_env();

struct TrainedClassifier {
  std::shared_ptr<const classifier::LinearModel> model;
  double train_ms = 0.0;
  // Against the latent class of the simulated population.
  classifier::Metrics holdout;
  double predict_ms = 0.0;
};

// Trains on cfg.training_size generated rows with cfg.sgd seeded by cfg.seed.
TrainedClassifier train_split_model(const sim::ScenarioConfig& cfg);

struct RunOptions {
  std::uint64_t batch_size = 1000;
  orchestrator::ExecutionMode mode = orchestrator::ExecutionMode::Serialized;
  bool record_users = false;
};

struct ScenarioRun {
  std::uint64_t seed = 0;
  orchestrator::ExecutionResult result;
  std::optional<TrainedClassifier> classifier;
  std::shared_ptr<sim::WebStore> store;
  std::string error;  // non-empty when the run aborted

  bool ok() const { return error.empty() && result.completed; }
};

// One seeded execution against a fresh web-store. Errors are captured in
// `error` together with the partial trace.
ScenarioRun run_scenario(const pipeline::PipelineSpec& spec, sim::ScenarioConfig cfg,
                         std::uint64_t seed, const RunOptions& options);

// trace.jsonl, summary.json and pvalues/<test>.csv.
void write_run_outputs(const std::filesystem::path& out_dir, const pipeline::PipelineSpec& spec,
                       const ScenarioRun& run, std::uint64_t batch_size);
std::string summary_json(const pipeline::PipelineSpec& spec, const ScenarioRun& run,
                         std::uint64_t batch_size);

double median(std::vector<double> values);

struct TestRow {
  std::string pipeline;  // "sequential" or "parallel"
  std::string key;       // result key, "subpl/test" inside a split
  std::string test;
  std::string sub_pipeline;  // empty at root level
  bool shared = false;       // root test present in both pipelines; left out of totals
  std::vector<double> until;  // per run: routed requests at termination
  std::vector<double> total;  // per run: stream requests while the test ran
  std::size_t significant_runs = 0;
  double median_until() const { return median(until); }
  double median_total() const { return median(total); }
};

struct Overhead {
  double train_ms = 0.0;
  double deploy_ms = 0.0;
  double predict_ms = 0.0;
};

struct ComparisonReport {
  std::size_t runs = 0;
  std::vector<std::uint64_t> seeds;
  std::uint64_t batch_size = 1000;
  std::vector<TestRow> rows;
  // Median stream requests per sub-pipeline, from split entry to its End.
  std::map<std::string, std::vector<double>> sub_totals;
  std::map<std::string, std::vector<double>> sub_until;
  std::map<std::string, std::vector<double>> split_fractions;
  std::vector<double> unrouted_fractions;
  double sequential_total = 0.0;
  double parallel_total = 0.0;
  double reduction_pct = 0.0;
  // Same ratio over routed requests only.
  double sequential_until = 0.0;
  double parallel_until = 0.0;
  double reduction_pct_until_significant = 0.0;
  Overhead overhead;  // wall-clock; kept out of the report files
  std::vector<std::string> failures;

  bool partial() const { return !failures.empty(); }
  const TestRow* row(const std::string& pipeline, const std::string& test) const;
};

struct Comparison {
  ComparisonReport report;
  // Web-stores are released; results and traces are kept.
  std::vector<ScenarioRun> sequential;
  std::vector<ScenarioRun> parallel;
};

// Runs both pipelines once per seed. `workers` = 0 uses one thread per core;
// each run is independent, so the outcome does not depend on it.
Comparison compare(const pipeline::PipelineSpec& sequential, const pipeline::PipelineSpec& parallel,
                   const sim::ScenarioConfig& cfg, const std::vector<std::uint64_t>& seeds,
                   const RunOptions& options, unsigned workers = 0);

std::string report_json(const ComparisonReport& report);
std::string report_text(const ComparisonReport& report);
// report.json, report.txt and pvalues/<pipeline>__<test>.csv with the median
// p-value per checkpoint over the runs that reached it.
void write_compare_outputs(const std::filesystem::path& out_dir, const Comparison& comparison);

// Median predict_class latency in ms over `samples` users of the population.
double median_predict_ms(const classifier::LinearModel& model,
                         const std::vector<sim::UserProfile>& population, std::size_t samples);

}  // namespace abpipe::cli
