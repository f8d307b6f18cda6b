#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "abpipe/classifier/linear_model.hpp"
#include "abpipe/stats/accumulator.hpp"

namespace abpipe::sim {

enum class SimErrorKind {
  InvalidConfig,
  UnknownVariant,
  UnknownMetric,
  DeploymentConflict,
  NoActiveTest,
  UnknownTest,
  UntrainedModel,
  Io,
};

class SimError : public std::runtime_error {
 public:
  SimError(SimErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  SimErrorKind kind() const noexcept { return kind_; }

 private:
  SimErrorKind kind_;
};

// Experiment a variant belongs to; each kind drives exactly one metric.
enum class VariantKind { Gui, Review, Recommendation };

std::string_view to_string(VariantKind k);
// engagement, clicks, purchases
std::string_view metric_of(VariantKind k);

struct VariantInfo {
  VariantKind kind = VariantKind::Gui;
  stats::Variant arm = stats::Variant::A;
  friend bool operator==(const VariantInfo&, const VariantInfo&) = default;
};

struct RatePair {
  double a = 0.0;
  double b = 0.0;
  double of(stats::Variant v) const { return v == stats::Variant::A ? a : b; }
  friend bool operator==(const RatePair&, const RatePair&) = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::uint64_t population_size = 100000;
  std::uint64_t training_size = 20000;
  double purchaser_prevalence = 0.042;
  std::size_t feature_count = classifier::kDefaultFeatureCount;
  // The first `informative_features` features copy the latent class, each
  // flipped with probability feature_noise; the rest are Bernoulli(background_rate).
  std::size_t informative_features = 12;
  double feature_noise = 0.15;
  double background_rate = 0.3;
  RatePair gui_rates{0.10, 0.13};
  RatePair review_rates{0.1470, 0.1617};
  RatePair recommendation_purchaser{0.30, 0.45};
  RatePair recommendation_non_purchaser{0.005, 0.005};
  // Simulated, never slept.
  double deploy_latency_ms = 0.0;
  classifier::SgdParams sgd;
  std::map<std::string, VariantInfo> variants;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

// Defaults plus the variant catalog used by the shipped blueprints.
ScenarioConfig default_scenario();

// Throws SimError{InvalidConfig} on out-of-range values.
void check_scenario(const ScenarioConfig& cfg);

// Missing fields keep their default_scenario() value.
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioConfig& cfg);

}  // namespace abpipe::sim
