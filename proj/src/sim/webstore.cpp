#include "abpipe/sim/webstore.hpp"

#include <array>

#include "abpipe/classifier/dispatch.hpp"
#include "abpipe/rng.hpp"

namespace abpipe::sim {

using stats::Variant;

struct WebStore::TestState {
  ActiveTest info;
  VariantInfo variant[2];
  std::vector<std::string> metrics;
  std::vector<std::uint64_t> metric_hash;
  std::size_t hypothesis_metric = 0;
  std::vector<std::array<stats::MetricAccumulator, 2>> acc;
  std::uint64_t test_hash = 0;
  std::uint64_t requests = 0;
  std::vector<std::uint64_t> users;
};

struct WebStore::SplitState {
  pipeline::PopulationSplitSpec spec;
  std::vector<std::int8_t> classes;  // per user
};

WebStore::WebStore(ScenarioConfig cfg, std::shared_ptr<const std::vector<UserProfile>> population,
                   std::shared_ptr<const classifier::LinearModel> model)
    : cfg_(std::move(cfg)), population_(std::move(population)), model_(std::move(model)) {
  check_scenario(cfg_);
  if (!population_ || population_->empty()) {
    throw SimError(SimErrorKind::InvalidConfig, "population is empty");
  }
}

WebStore::WebStore(ScenarioConfig cfg, std::shared_ptr<const classifier::LinearModel> model)
    : WebStore(cfg,
               std::make_shared<const std::vector<UserProfile>>(
                   generate_population(cfg, cfg.population_size)),
               std::move(model)) {}

WebStore::~WebStore() = default;

void WebStore::set_model(std::shared_ptr<const classifier::LinearModel> model) {
  std::lock_guard lock(mutex_);
  model_ = std::move(model);
}

std::uint64_t WebStore::arrival(std::uint64_t g) const {
  const std::uint64_t h = hash_values(cfg_.seed, fnv1a64("arrival"), g);
  return (*population_)[h % population_->size()].user_id;
}

std::vector<std::string> WebStore::missing_variants(const pipeline::PipelineSpec& spec) const {
  std::set<std::string> missing;
  for (const auto& t : spec.ab_tests) {
    for (const auto* id : {&t.variant_a, &t.variant_b}) {
      if (!cfg_.variants.contains(*id)) missing.insert(*id);
    }
  }
  return {missing.begin(), missing.end()};
}

void WebStore::deploy(const pipeline::ABTestSpec& test) {
  ActiveTest info{test.name, test.component, test.variant_a, test.variant_b,
                  test.ab_assignment.a};
  std::lock_guard lock(mutex_);
  if (auto it = active_.find(test.name); it != active_.end()) {
    if (it->second->info == info) return;
    throw SimError(SimErrorKind::DeploymentConflict,
                   "test '" + test.name + "' is already deployed with a different configuration");
  }
  auto state = std::make_unique<TestState>();
  state->info = info;
  for (int arm = 0; arm < 2; ++arm) {
    const std::string& id = arm == 0 ? test.variant_a : test.variant_b;
    const auto v = cfg_.variants.find(id);
    if (v == cfg_.variants.end()) {
      throw SimError(SimErrorKind::UnknownVariant, "unknown variant '" + id + "'");
    }
    state->variant[arm] = v->second;
  }
  if (state->variant[0].kind != state->variant[1].kind) {
    throw SimError(SimErrorKind::UnknownVariant,
                   "variants of test '" + test.name + "' belong to different experiments");
  }
  const VariantKind kind = state->variant[0].kind;
  for (const auto& m : test.ab_metrics) {
    if (m != metric_of(kind)) {
      throw SimError(SimErrorKind::UnknownMetric,
                     "metric '" + m + "' is not produced by " + std::string(to_string(kind)) +
                         " variants (expected '" + std::string(metric_of(kind)) + "')");
    }
    if (m == test.hypothesis.metric) state->hypothesis_metric = state->metrics.size();
    state->metrics.push_back(m);
    state->metric_hash.push_back(fnv1a64(m));
  }
  if (state->metrics.empty()) {
    throw SimError(SimErrorKind::UnknownMetric, "test '" + test.name + "' collects no metrics");
  }
  if (auto c = components_.find(test.component); c != components_.end()) {
    throw SimError(SimErrorKind::DeploymentConflict,
                   "component '" + test.component + "' is already used by test '" + c->second +
                       "'");
  }
  state->acc.resize(state->metrics.size());
  state->test_hash = fnv1a64(test.name);
  components_[test.component] = test.name;
  finished_.erase(test.name);
  active_[test.name] = std::move(state);
}

void WebStore::restore(const std::string& test) {
  std::lock_guard lock(mutex_);
  auto it = active_.find(test);
  if (it == active_.end()) {
    throw SimError(SimErrorKind::NoActiveTest, "test '" + test + "' is not deployed");
  }
  components_.erase(it->second->info.component);
  finished_[test] = std::move(it->second);
  active_.erase(it);
}

void WebStore::deploy_split_component(const pipeline::PopulationSplitSpec& split) {
  std::lock_guard lock(mutex_);
  if (splits_.contains(split.name)) return;
  if (!model_) {
    throw SimError(SimErrorKind::UntrainedModel,
                   "split '" + split.name + "' needs a trained classifier");
  }
  if (model_->features() != cfg_.feature_count) {
    throw SimError(SimErrorKind::UntrainedModel,
                   "classifier expects " + std::to_string(model_->features()) +
                       " features, users have " + std::to_string(cfg_.feature_count));
  }
  auto state = std::make_unique<SplitState>();
  state->spec = split;
  state->classes.reserve(population_->size());
  for (const auto& u : *population_) {
    state->classes.push_back(static_cast<std::int8_t>(model_->predict_class(u.features)));
  }
  splits_[split.name] = std::move(state);
}

void WebStore::remove_split_component(const std::string& split) {
  std::lock_guard lock(mutex_);
  splits_.erase(split);
}

int WebStore::predicted_class(const std::string& split, std::uint64_t user) const {
  // Split components are only added or removed while no sub-pipeline runs.
  const auto it = splits_.find(split);
  if (it == splits_.end()) {
    throw SimError(SimErrorKind::UnknownTest, "split component '" + split + "' is not deployed");
  }
  return it->second->classes.at(user);
}

std::optional<std::size_t> WebStore::route(const std::string& split, std::uint64_t user) const {
  const auto it = splits_.find(split);
  if (it == splits_.end()) {
    throw SimError(SimErrorKind::UnknownTest, "split component '" + split + "' is not deployed");
  }
  return classifier::route_class(it->second->spec, it->second->classes.at(user));
}

WebStore::TestState& WebStore::find_state(const std::string& test) const {
  std::lock_guard lock(mutex_);
  const auto it = active_.find(test);
  if (it == active_.end()) {
    throw SimError(SimErrorKind::NoActiveTest, "no active test '" + test + "'");
  }
  return *it->second;
}

const WebStore::TestState* WebStore::find_any(const std::string& test) const {
  std::lock_guard lock(mutex_);
  if (auto it = active_.find(test); it != active_.end()) return it->second.get();
  if (auto it = finished_.find(test); it != finished_.end()) return it->second.get();
  return nullptr;
}

Variant WebStore::assigned_variant(const std::string& test, std::uint64_t user) const {
  const auto* s = find_any(test);
  if (!s) throw SimError(SimErrorKind::UnknownTest, "unknown test '" + test + "'");
  const double u = to_unit(hash_values(cfg_.seed, fnv1a64("variant"), user, s->test_hash));
  return u < s->info.fraction_a ? Variant::A : Variant::B;
}

void WebStore::serve(const std::string& test, std::uint64_t user) {
  TestState& s = find_state(test);
  const UserProfile& profile = population_->at(user);
  const double u = to_unit(hash_values(cfg_.seed, fnv1a64("variant"), user, s.test_hash));
  const int arm = u < s.info.fraction_a ? 0 : 1;
  const double p = profile.propensity(s.variant[arm].kind, s.variant[arm].arm);
  const std::uint64_t index = s.requests++;
  for (std::size_t m = 0; m < s.metrics.size(); ++m) {
    const double draw =
        to_unit(hash_values(cfg_.seed, fnv1a64("outcome"), s.test_hash, index, s.metric_hash[m]));
    s.acc[m][arm].add(draw < p ? 1.0 : 0.0);
  }
  if (record_users_) s.users.push_back(user);
}

orchestrator::Probe WebStore::probe(const std::string& test) const {
  const auto* s = find_any(test);
  if (!s) throw SimError(SimErrorKind::UnknownTest, "unknown test '" + test + "'");
  orchestrator::Probe p;
  p.a = s->acc[s->hypothesis_metric][0];
  p.b = s->acc[s->hypothesis_metric][1];
  p.requests = s->requests;
  return p;
}

std::map<std::string, MetricSnapshot> WebStore::probe_metrics(const std::string& test) const {
  const auto* s = find_any(test);
  if (!s) throw SimError(SimErrorKind::UnknownTest, "unknown test '" + test + "'");
  std::map<std::string, MetricSnapshot> out;
  for (std::size_t m = 0; m < s->metrics.size(); ++m) {
    out[s->metrics[m]] = {s->acc[m][0], s->acc[m][1]};
  }
  return out;
}

std::vector<std::uint64_t> WebStore::served_users(const std::string& test) const {
  const auto* s = find_any(test);
  if (!s) throw SimError(SimErrorKind::UnknownTest, "unknown test '" + test + "'");
  return s->users;
}

DeploymentState WebStore::state() const {
  std::lock_guard lock(mutex_);
  DeploymentState d;
  for (const auto& [name, s] : active_) d.active[name] = s->info;
  for (const auto& [name, s] : splits_) d.split_components.insert(name);
  return d;
}

}  // namespace abpipe::sim
