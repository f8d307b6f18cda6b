#include "abpipe/sim/population.hpp"

#include "abpipe/rng.hpp"

namespace abpipe::sim {
namespace {

constexpr std::size_t slot(VariantKind kind, stats::Variant arm) {
  return static_cast<std::size_t>(kind) * 2 + (arm == stats::Variant::A ? 0 : 1);
}

// Latent class and features share one generator so the correlation is exact.
void draw_profile(const ScenarioConfig& cfg, SplitMix64& rng, bool& purchaser,
                  classifier::FeatureVector& features) {
  purchaser = rng.uniform() < cfg.purchaser_prevalence;
  features.assign(cfg.feature_count, 0);
  for (std::size_t j = 0; j < cfg.feature_count; ++j) {
    const double u = rng.uniform();
    if (j < cfg.informative_features) {
      const bool flip = u < cfg.feature_noise;
      features[j] = (purchaser != flip) ? 1 : 0;
    } else {
      features[j] = u < cfg.background_rate ? 1 : 0;
    }
  }
}

}  // namespace

double UserProfile::propensity(VariantKind kind, stats::Variant arm) const {
  return propensities[slot(kind, arm)];
}

UserProfile make_user(const ScenarioConfig& cfg, std::uint64_t user_id) {
  UserProfile u;
  u.user_id = user_id;
  SplitMix64 rng(hash_values(cfg.seed, fnv1a64("population"), user_id));
  draw_profile(cfg, rng, u.purchaser, u.features);
  using stats::Variant;
  for (Variant arm : {Variant::A, Variant::B}) {
    u.propensities[slot(VariantKind::Gui, arm)] = cfg.gui_rates.of(arm);
    u.propensities[slot(VariantKind::Review, arm)] = cfg.review_rates.of(arm);
    u.propensities[slot(VariantKind::Recommendation, arm)] =
        u.purchaser ? cfg.recommendation_purchaser.of(arm)
                    : cfg.recommendation_non_purchaser.of(arm);
  }
  return u;
}

std::vector<UserProfile> generate_population(const ScenarioConfig& cfg, std::uint64_t n) {
  std::vector<UserProfile> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(make_user(cfg, i));
  return out;
}

classifier::Dataset generate_training_data(const ScenarioConfig& cfg, std::uint64_t n) {
  classifier::Dataset data;
  data.x.resize(n);
  data.y.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    SplitMix64 rng(hash_values(cfg.seed, fnv1a64("training"), i));
    bool purchaser = false;
    draw_profile(cfg, rng, purchaser, data.x[i]);
    data.y[i] = purchaser ? 1 : 0;
  }
  return data;
}

}  // namespace abpipe::sim
