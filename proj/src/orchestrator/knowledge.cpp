#include "abpipe/orchestrator/knowledge.hpp"

namespace abpipe::orchestrator {

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::DeployVariants:
      return "deploy_variants";
    case ActionKind::ConfigureRouting:
      return "configure_routing";
    case ActionKind::RestoreInitial:
      return "restore_initial";
    case ActionKind::DeploySplitComponent:
      return "deploy_split_component";
    case ActionKind::RemoveSplitComponent:
      return "remove_split_component";
    case ActionKind::NotifyComplete:
      return "notify_complete";
  }
  return "?";
}

void KnowledgeInstance::record(const std::string& key, TestOutcome outcome) {
  if (results.contains(key)) {
    throw OrchestratorError(OrchestratorErrorKind::TestReentry,
                            "instance '" + id + "' already holds a result for '" + key + "'");
  }
  results.emplace(key, std::move(outcome));
}

KnowledgeInstance& KnowledgeRepository::add_instance(const std::string& id,
                                                     std::optional<RoutingConfig> routing) {
  std::lock_guard lock(mutex_);
  if (instances_.contains(id)) {
    throw OrchestratorError(OrchestratorErrorKind::InstanceCollision,
                            "knowledge instance '" + id + "' already exists");
  }
  auto inst = std::make_unique<KnowledgeInstance>();
  inst->id = id;
  inst->routing = std::move(routing);
  auto& ref = *inst;
  instances_.emplace(id, std::move(inst));
  return ref;
}

KnowledgeInstance KnowledgeRepository::remove_instance(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = instances_.find(id);
  if (it == instances_.end()) {
    throw OrchestratorError(OrchestratorErrorKind::UnknownInstance,
                            "no knowledge instance '" + id + "'");
  }
  KnowledgeInstance out = std::move(*it->second);
  instances_.erase(it);
  return out;
}

KnowledgeInstance* KnowledgeRepository::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : it->second.get();
}

const KnowledgeInstance* KnowledgeRepository::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : it->second.get();
}

bool KnowledgeRepository::contains(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return instances_.contains(id);
}

std::size_t KnowledgeRepository::size() const {
  std::lock_guard lock(mutex_);
  return instances_.size();
}

std::vector<std::string> KnowledgeRepository::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, inst] : instances_) out.push_back(id);
  return out;
}

}  // namespace abpipe::orchestrator
