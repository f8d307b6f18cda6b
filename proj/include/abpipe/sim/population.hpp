#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "abpipe/classifier/linear_model.hpp"
#include "abpipe/sim/scenario.hpp"

namespace abpipe::sim {

struct UserProfile {
  std::uint64_t user_id = 0;
  classifier::FeatureVector features;
  bool purchaser = false;  // latent class, never shown to the classifier
  // Behaviour probability per (variant kind, arm), index kind * 2 + arm.
  std::array<double, 6> propensities{};

  double propensity(VariantKind kind, stats::Variant arm) const;
  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

// Independent draws per index: generating n users yields the same first k
// users as generating k.
UserProfile make_user(const ScenarioConfig& cfg, std::uint64_t user_id);
std::vector<UserProfile> generate_population(const ScenarioConfig& cfg, std::uint64_t n);

// Labelled propensity-style samples from a stream disjoint from the population.
classifier::Dataset generate_training_data(const ScenarioConfig& cfg, std::uint64_t n);

}  // namespace abpipe::sim
