#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "abpipe/pipeline/spec.hpp"

namespace abpipe::pipeline {

enum class BlueprintErrorKind { Io, Syntax, UnresolvedReference, DuplicateName };

class BlueprintError : public std::runtime_error {
 public:
  BlueprintError(BlueprintErrorKind kind, std::string element, const std::string& what)
      : std::runtime_error(what), kind_(kind), element_(std::move(element)) {}
  BlueprintErrorKind kind() const noexcept { return kind_; }
  // Offending element name (unresolved / duplicate) or file (syntax / io).
  const std::string& element() const noexcept { return element_; }

 private:
  BlueprintErrorKind kind_;
  std::string element_;
};

// In-memory blueprint bundle: file name (relative to its kind directory) -> JSON text.
//
// On disk:
//   pipeline.json          the pipeline
//   experiments/*.json     one A/B test each
//   rules/*.json           one transition rule each
//   splits/*.json          one population split each (conditions as {"==", 0} pairs)
//   pipelines/*.json       one sub-pipeline each
struct BlueprintBundle {
  std::string pipeline;
  std::map<std::string, std::string> experiments;
  std::map<std::string, std::string> rules;
  std::map<std::string, std::string> splits;
  std::map<std::string, std::string> pipelines;
};

BlueprintBundle load_bundle(const std::filesystem::path& dir);
void write_bundle(const BlueprintBundle& bundle, const std::filesystem::path& dir);

// Parses and links a bundle. Throws BlueprintError.
PipelineSpec parse_blueprints(const BlueprintBundle& bundle);
PipelineSpec parse_blueprints(const std::filesystem::path& dir);

BlueprintBundle serialize_blueprints(const PipelineSpec& spec);

}  // namespace abpipe::pipeline
