#include "abpipe/sim/scenario.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace abpipe::sim {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(VariantKind k) {
  switch (k) {
    case VariantKind::Gui:
      return "gui";
    case VariantKind::Review:
      return "review";
    case VariantKind::Recommendation:
      return "recommendation";
  }
  return "?";
}

std::string_view metric_of(VariantKind k) {
  switch (k) {
    case VariantKind::Gui:
      return "engagement";
    case VariantKind::Review:
      return "clicks";
    case VariantKind::Recommendation:
      return "purchases";
  }
  return "?";
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  using stats::Variant;
  cfg.variants = {
      {"gui-classic", {VariantKind::Gui, Variant::A}},
      {"gui-upgrade", {VariantKind::Gui, Variant::B}},
      {"review-basic", {VariantKind::Review, Variant::A}},
      {"review-highlighted", {VariantKind::Review, Variant::B}},
      {"recommendation-popular", {VariantKind::Recommendation, Variant::A}},
      {"recommendation-personal", {VariantKind::Recommendation, Variant::B}},
  };
  return cfg;
}

namespace {

void check_probability(double p, const std::string& name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw SimError(SimErrorKind::InvalidConfig, name + " must lie in [0, 1]");
  }
}

void check_pair(const RatePair& r, const std::string& name) {
  check_probability(r.a, name + ".A");
  check_probability(r.b, name + ".B");
}

RatePair read_pair(const json& j, RatePair fallback) {
  fallback.a = j.value("A", fallback.a);
  fallback.b = j.value("B", fallback.b);
  return fallback;
}

ordered_json write_pair(const RatePair& r) { return ordered_json{{"A", r.a}, {"B", r.b}}; }

std::optional<VariantKind> parse_kind(const std::string& s) {
  if (s == "gui") return VariantKind::Gui;
  if (s == "review") return VariantKind::Review;
  if (s == "recommendation") return VariantKind::Recommendation;
  return std::nullopt;
}

}  // namespace

void check_scenario(const ScenarioConfig& cfg) {
  check_probability(cfg.purchaser_prevalence, "purchaser_prevalence");
  check_probability(cfg.feature_noise, "feature_noise");
  check_probability(cfg.background_rate, "background_rate");
  check_pair(cfg.gui_rates, "gui_rates");
  check_pair(cfg.review_rates, "review_rates");
  check_pair(cfg.recommendation_purchaser, "recommendation_rates.purchaser");
  check_pair(cfg.recommendation_non_purchaser, "recommendation_rates.non_purchaser");
  if (cfg.population_size < 1) {
    throw SimError(SimErrorKind::InvalidConfig, "population_size must be at least 1");
  }
  if (cfg.feature_count < 1 || cfg.informative_features > cfg.feature_count) {
    throw SimError(SimErrorKind::InvalidConfig,
                   "informative_features must not exceed feature_count (>= 1)");
  }
  if (!(cfg.deploy_latency_ms >= 0.0)) {
    throw SimError(SimErrorKind::InvalidConfig, "deploy_latency_ms must be non-negative");
  }
}

ScenarioConfig parse_scenario(const std::string& json_text) {
  ScenarioConfig cfg = default_scenario();
  try {
    const json j = json::parse(json_text);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.population_size = j.value("population_size", cfg.population_size);
    cfg.training_size = j.value("training_size", cfg.training_size);
    cfg.purchaser_prevalence = j.value("purchaser_prevalence", cfg.purchaser_prevalence);
    cfg.feature_count = j.value("feature_count", cfg.feature_count);
    cfg.informative_features = j.value("informative_features", cfg.informative_features);
    cfg.feature_noise = j.value("feature_noise", cfg.feature_noise);
    cfg.background_rate = j.value("background_rate", cfg.background_rate);
    if (j.contains("gui_rates")) cfg.gui_rates = read_pair(j["gui_rates"], cfg.gui_rates);
    if (j.contains("review_rates")) cfg.review_rates = read_pair(j["review_rates"], cfg.review_rates);
    if (j.contains("recommendation_rates")) {
      const auto& r = j["recommendation_rates"];
      if (r.contains("purchaser")) {
        cfg.recommendation_purchaser = read_pair(r["purchaser"], cfg.recommendation_purchaser);
      }
      if (r.contains("non_purchaser")) {
        cfg.recommendation_non_purchaser =
            read_pair(r["non_purchaser"], cfg.recommendation_non_purchaser);
      }
    }
    cfg.deploy_latency_ms = j.value("deploy_latency_ms", cfg.deploy_latency_ms);
    if (j.contains("classifier")) {
      const auto& c = j["classifier"];
      cfg.sgd.epochs = c.value("epochs", cfg.sgd.epochs);
      cfg.sgd.eta0 = c.value("eta0", cfg.sgd.eta0);
      cfg.sgd.power_t = c.value("power_t", cfg.sgd.power_t);
      cfg.sgd.l2 = c.value("l2", cfg.sgd.l2);
      cfg.sgd.balanced = c.value("balanced", cfg.sgd.balanced);
    }
    if (j.contains("variants")) {
      cfg.variants.clear();
      for (const auto& [id, v] : j["variants"].items()) {
        const auto kind = parse_kind(v.at("kind").get<std::string>());
        const std::string arm = v.at("arm").get<std::string>();
        if (!kind || (arm != "A" && arm != "B")) {
          throw SimError(SimErrorKind::InvalidConfig, "variant '" + id + "' has a bad kind or arm");
        }
        cfg.variants[id] = {*kind, arm == "A" ? stats::Variant::A : stats::Variant::B};
      }
    }
  } catch (const json::exception& e) {
    throw SimError(SimErrorKind::InvalidConfig, std::string("scenario: ") + e.what());
  }
  check_scenario(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError(SimErrorKind::Io, "cannot open scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["population_size"] = cfg.population_size;
  j["training_size"] = cfg.training_size;
  j["purchaser_prevalence"] = cfg.purchaser_prevalence;
  j["feature_count"] = cfg.feature_count;
  j["informative_features"] = cfg.informative_features;
  j["feature_noise"] = cfg.feature_noise;
  j["background_rate"] = cfg.background_rate;
  j["gui_rates"] = write_pair(cfg.gui_rates);
  j["review_rates"] = write_pair(cfg.review_rates);
  j["recommendation_rates"] = {{"purchaser", write_pair(cfg.recommendation_purchaser)},
                               {"non_purchaser", write_pair(cfg.recommendation_non_purchaser)}};
  j["deploy_latency_ms"] = cfg.deploy_latency_ms;
  j["classifier"] = {{"epochs", cfg.sgd.epochs},
                     {"eta0", cfg.sgd.eta0},
                     {"power_t", cfg.sgd.power_t},
                     {"l2", cfg.sgd.l2},
                     {"balanced", cfg.sgd.balanced}};
  ordered_json variants = ordered_json::object();
  for (const auto& [id, v] : cfg.variants) {
    variants[id] = {{"kind", std::string(to_string(v.kind))},
                    {"arm", std::string(stats::to_string(v.arm))}};
  }
  j["variants"] = variants;
  return j.dump(2) + "\n";
}

}  // namespace abpipe::sim
