#include "abpipe/pipeline/blueprint.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

namespace abpipe::pipeline {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void syntax_error(const std::string& file, const std::string& message) {
  throw BlueprintError(BlueprintErrorKind::Syntax, file, file + ": " + message);
}

[[noreturn]] void unresolved(const std::string& name, const std::string& where) {
  throw BlueprintError(BlueprintErrorKind::UnresolvedReference, name,
                       "unresolved reference '" + name + "' in " + where);
}

[[noreturn]] void duplicate(const std::string& name, const std::string& where) {
  throw BlueprintError(BlueprintErrorKind::DuplicateName, name,
                       "duplicate name '" + name + "' in " + where);
}

// Split conditions are conventionally written {"==", 0}, which is not JSON.
// Rewrite them to the two-element array form before handing the text to the parser.
std::string normalise_condition_records(const std::string& text) {
  static const std::regex kRecord(R"re(\{\s*"(==|!=|<=|>=|<|>)"\s*,\s*(-?\d+)\s*\})re");
  return std::regex_replace(text, kRecord, R"(["$1", $2])");
}

json parse_json(const std::string& file, const std::string& text) {
  try {
    return json::parse(normalise_condition_records(text));
  } catch (const json::parse_error& e) {
    // byte is 1-based and points just past the offending character
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "syntax error at line " << line << ", column " << col << " (byte " << byte
        << "): " << e.what();
    syntax_error(file, msg.str());
  }
}

class Reader {
 public:
  Reader(const json& obj, std::string file) : obj_(obj), file_(std::move(file)) {
    if (!obj_.is_object()) syntax_error(file_, "expected a JSON object");
  }

  const json& at(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) syntax_error(file_, std::string("missing field '") + key + "'");
    return *it;
  }
  bool has(const char* key) const { return obj_.contains(key); }

  std::string str(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) syntax_error(file_, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }
  double number(const json& v, const std::string& what) const {
    if (!v.is_number()) syntax_error(file_, what + " must be a number");
    return v.get<double>();
  }
  double number(const char* key) const { return number(at(key), std::string("field '") + key + "'"); }
  std::uint64_t positive_integer(const char* key) const {
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
      syntax_error(file_, std::string("field '") + key + "' must be a positive integer");
    }
    return v.get<std::uint64_t>();
  }
  std::vector<std::string> strings(const char* key, bool optional = false) const {
    if (optional && !has(key)) return {};
    const json& v = at(key);
    if (!v.is_array()) syntax_error(file_, std::string("field '") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) {
        syntax_error(file_, std::string("field '") + key + "' must contain strings");
      }
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  Reader object(const char* key) const { return Reader(at(key), file_); }
  const std::string& file() const { return file_; }

 private:
  const json& obj_;
  std::string file_;
};

ABTestSpec read_test(const Reader& r) {
  ABTestSpec t;
  t.name = r.str("name");
  t.component = r.str("component");
  t.exp_length = r.positive_integer("length");
  const Reader assignment = r.object("assignment");
  t.ab_assignment.a = assignment.number("A");
  t.ab_assignment.b = assignment.number("B");
  const Reader hyp = r.object("hypothesis");
  t.hypothesis.metric = hyp.str("metric");
  const auto direction = stats::parse_direction(hyp.str("direction"));
  if (!direction) syntax_error(r.file(), "unknown hypothesis direction '" + hyp.str("direction") + "'");
  t.hypothesis.direction = *direction;
  t.hypothesis.alpha = hyp.number("alpha");
  t.ab_metrics = r.strings("metrics");
  const auto kind = stats::parse_stat_test(r.str("statisticalTest"));
  if (!kind) syntax_error(r.file(), "unknown statisticalTest '" + r.str("statisticalTest") + "'");
  t.stat_test = *kind;
  t.variant_a = r.str("variantA");
  t.variant_b = r.str("variantB");
  return t;
}

TransitionRule read_rule(const Reader& r) {
  TransitionRule rule;
  rule.name = r.str("name");
  rule.assoc_ab_test = r.str("associatedTest");
  try {
    rule.cond_stat = Condition::parse(r.str("condition"));
  } catch (const ConditionSyntaxError& e) {
    syntax_error(r.file(), "field 'condition': " + std::string(e.what()));
  }
  rule.subseq_ab_test = r.str("subsequentTest");
  return rule;
}

struct RawSplit {
  PopulationSplitSpec spec;  // sub_pipelines not yet linked
  std::vector<std::string> pipelines;
};

RawSplit read_split(const Reader& r) {
  RawSplit raw;
  raw.spec.name = r.str("name");
  raw.spec.split_property = r.str("splitProperty");
  raw.pipelines = r.strings("pipelines");
  const json& conds = r.at("conditionalStatements");
  if (!conds.is_array()) syntax_error(r.file(), "field 'conditionalStatements' must be an array");
  for (const auto& c : conds) {
    std::string op_text;
    json value;
    if (c.is_array() && c.size() == 2 && c[0].is_string()) {
      op_text = c[0].get<std::string>();
      value = c[1];
    } else if (c.is_object() && c.contains("op") && c.contains("value") && c["op"].is_string()) {
      op_text = c["op"].get<std::string>();
      value = c["value"];
    } else {
      syntax_error(r.file(), "conditional statement must be {op, value}");
    }
    SplitCondition sc;
    if (!parse_compare_op(op_text, sc.op)) {
      syntax_error(r.file(), "unknown conditional operator '" + op_text + "'");
    }
    if (!value.is_number_integer()) syntax_error(r.file(), "conditional value must be an integer");
    sc.value = value.get<int>();
    raw.spec.cond_stats.push_back(sc);
  }
  raw.spec.next_component = r.str("nextComponent");
  const Reader component = r.object("splitComponent");
  raw.spec.split_component.service_name = component.str("serviceName");
  raw.spec.split_component.image_name = component.str("imageName");
  return raw;
}

struct RawSub {
  std::string name;
  std::string start;
  std::vector<std::string> experiments;
  std::vector<std::string> rules;
};

RawSub read_sub(const Reader& r) {
  return RawSub{r.str("name"), r.str("startingComponent"), r.strings("experiments"),
                r.strings("transitionRules")};
}

template <typename T, typename ReadFn>
std::map<std::string, T> read_kind(const std::map<std::string, std::string>& files,
                                   const std::string& dir, ReadFn read, auto name_of) {
  std::map<std::string, T> out;
  for (const auto& [file, text] : files) {
    const std::string where = dir + "/" + file;
    const json doc = parse_json(where, text);
    T item = read(Reader(doc, where));
    std::string name = name_of(item);
    if (name.empty()) syntax_error(where, "field 'name' must not be empty");
    if (is_end(name) || name == "Start") syntax_error(where, "'" + name + "' is a reserved name");
    if (!out.emplace(name, std::move(item)).second) duplicate(name, dir);
  }
  return out;
}

std::string file_name_for(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += safe ? c : '_';
  }
  return out + ".json";
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw BlueprintError(BlueprintErrorKind::Io, p.string(), "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    out.emplace(p.filename().string(), ss.str());
  }
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw BlueprintError(BlueprintErrorKind::Io, p.string(), "cannot write " + p.string());
  out << text;
}

}  // namespace

BlueprintBundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw BlueprintError(BlueprintErrorKind::Io, dir.string(),
                         "blueprint directory not found: " + dir.string());
  }
  const fs::path pipeline = dir / "pipeline.json";
  std::ifstream in(pipeline, std::ios::binary);
  if (!in) {
    throw BlueprintError(BlueprintErrorKind::Io, pipeline.string(),
                         "cannot read " + pipeline.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  BlueprintBundle b;
  b.pipeline = ss.str();
  b.experiments = read_dir(dir / "experiments");
  b.rules = read_dir(dir / "rules");
  b.splits = read_dir(dir / "splits");
  b.pipelines = read_dir(dir / "pipelines");
  return b;
}

void write_bundle(const BlueprintBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw BlueprintError(BlueprintErrorKind::Io, dir.string(), "cannot create " + dir.string());
  write_file(dir / "pipeline.json", bundle.pipeline);
  const std::pair<const char*, const std::map<std::string, std::string>*> kinds[] = {
      {"experiments", &bundle.experiments},
      {"rules", &bundle.rules},
      {"splits", &bundle.splits},
      {"pipelines", &bundle.pipelines}};
  for (const auto& [sub, files] : kinds) {
    if (files->empty()) continue;
    fs::create_directories(dir / sub, ec);
    for (const auto& [name, text] : *files) write_file(dir / sub / name, text);
  }
}

PipelineSpec parse_blueprints(const fs::path& dir) { return parse_blueprints(load_bundle(dir)); }

PipelineSpec parse_blueprints(const BlueprintBundle& bundle) {
  const auto tests = read_kind<ABTestSpec>(bundle.experiments, "experiments", read_test,
                                           [](const ABTestSpec& t) { return t.name; });
  const auto rules = read_kind<TransitionRule>(bundle.rules, "rules", read_rule,
                                               [](const TransitionRule& r) { return r.name; });
  const auto splits = read_kind<RawSplit>(bundle.splits, "splits", read_split,
                                          [](const RawSplit& s) { return s.spec.name; });
  const auto subs = read_kind<RawSub>(bundle.pipelines, "pipelines", read_sub,
                                      [](const RawSub& s) { return s.name; });

  const json doc = parse_json("pipeline.json", bundle.pipeline);
  const Reader root(doc, "pipeline.json");

  PipelineSpec spec;
  spec.name = root.str("name");
  std::set<std::string> root_tests;
  std::set<std::string> declared_tests;
  std::set<std::string> declared_splits;

  auto declare_test = [&](const std::string& name, const std::string& where) {
    auto it = tests.find(name);
    if (it == tests.end()) unresolved(name, where);
    if (declared_tests.insert(name).second) spec.ab_tests.push_back(it->second);
  };

  for (const auto& name : root.strings("experiments")) {
    if (!root_tests.insert(name).second) duplicate(name, "pipeline.json experiments");
    declare_test(name, "pipeline.json experiments");
  }
  const auto split_names = root.strings("populationSplits", true);
  for (const auto& name : split_names) {
    if (!splits.contains(name)) unresolved(name, "pipeline.json populationSplits");
    if (!declared_splits.insert(name).second) duplicate(name, "pipeline.json populationSplits");
    if (declared_tests.contains(name)) duplicate(name, "pipeline.json (test and split)");
  }

  // Sub-pipelines are linked before any rule so that rule targets can be resolved.
  std::set<std::string> seen_subs;
  for (const auto& split_name : split_names) {
    const RawSplit& raw = splits.at(split_name);
    PopulationSplitSpec split = raw.spec;
    for (const auto& sub_name : raw.pipelines) {
      auto it = subs.find(sub_name);
      if (it == subs.end()) unresolved(sub_name, "split '" + split_name + "' pipelines");
      if (!seen_subs.insert(sub_name).second) duplicate(sub_name, "population split sub-pipelines");
      const std::string where = "sub-pipeline '" + sub_name + "'";
      for (const auto& t : it->second.experiments) {
        if (root_tests.contains(t)) duplicate(t, where + " (also a root-level experiment)");
        declare_test(t, where + " experiments");
      }
      SubPipeline sub;
      sub.id = sub_name;
      sub.start = it->second.start;
      sub.ab_tests = it->second.experiments;
      split.sub_pipelines.push_back(std::move(sub));
    }
    spec.pop_splits.push_back(std::move(split));
  }
  for (const auto& name : declared_splits) {
    if (declared_tests.contains(name)) duplicate(name, "pipeline.json (test and split)");
  }

  auto check_element = [&](const std::string& name, const std::string& where, bool allow_split) {
    if (is_end(name) || declared_tests.contains(name)) return;
    if (allow_split && declared_splits.contains(name)) return;
    unresolved(name, where);
  };
  auto link_rule = [&](const std::string& rule_name, const std::string& where) {
    auto it = rules.find(rule_name);
    if (it == rules.end()) unresolved(rule_name, where);
    const TransitionRule& rule = it->second;
    check_element(rule.assoc_ab_test, "rule '" + rule_name + "' associatedTest", false);
    check_element(rule.subseq_ab_test, "rule '" + rule_name + "' subsequentTest", true);
    return rule;
  };

  std::set<std::string> root_rule_names;
  for (const auto& name : root.strings("transitionRules")) {
    if (!root_rule_names.insert(name).second) duplicate(name, "pipeline.json transitionRules");
    spec.trans_rules.push_back(link_rule(name, "pipeline.json transitionRules"));
  }
  for (auto& split : spec.pop_splits) {
    for (auto& sub : split.sub_pipelines) {
      const RawSub& raw = subs.at(sub.id);
      const std::string where = "sub-pipeline '" + sub.id + "'";
      check_element(sub.start, where + " startingComponent", true);
      std::set<std::string> names;
      for (const auto& rule_name : raw.rules) {
        if (!names.insert(rule_name).second) duplicate(rule_name, where + " transitionRules");
        sub.trans_rules.push_back(link_rule(rule_name, where + " transitionRules"));
      }
    }
    check_element(split.next_component, "split '" + split.name + "' nextComponent", true);
  }

  spec.start = root.str("startingComponent");
  check_element(spec.start, "pipeline.json startingComponent", true);
  return spec;
}

BlueprintBundle serialize_blueprints(const PipelineSpec& spec) {
  BlueprintBundle b;
  auto dump = [](const ordered_json& j) { return j.dump(2) + "\n"; };

  for (const auto& t : spec.ab_tests) {
    ordered_json j;
    j["name"] = t.name;
    j["component"] = t.component;
    j["length"] = t.exp_length;
    j["assignment"] = {{"A", t.ab_assignment.a}, {"B", t.ab_assignment.b}};
    j["hypothesis"] = {{"metric", t.hypothesis.metric},
                       {"direction", std::string(stats::to_string(t.hypothesis.direction))},
                       {"alpha", t.hypothesis.alpha}};
    j["metrics"] = t.ab_metrics;
    j["statisticalTest"] = std::string(stats::to_string(t.stat_test));
    j["variantA"] = t.variant_a;
    j["variantB"] = t.variant_b;
    b.experiments[file_name_for(t.name)] = dump(j);
  }

  auto emit_rule = [&](const TransitionRule& r) {
    ordered_json j;
    j["name"] = r.name;
    j["associatedTest"] = r.assoc_ab_test;
    j["condition"] = r.cond_stat.to_string();
    j["subsequentTest"] = r.subseq_ab_test;
    b.rules[file_name_for(r.name)] = dump(j);
    return r.name;
  };

  std::vector<std::string> root_rules;
  for (const auto& r : spec.trans_rules) root_rules.push_back(emit_rule(r));

  std::vector<std::string> split_names;
  std::vector<std::string> sub_names;
  for (const auto& s : spec.pop_splits) {
    ordered_json j;
    j["name"] = s.name;
    j["splitProperty"] = s.split_property;
    std::vector<std::string> pipelines;
    for (const auto& sub : s.sub_pipelines) {
      pipelines.push_back(sub.id);
      sub_names.push_back(sub.id);
      ordered_json sj;
      sj["name"] = sub.id;
      sj["startingComponent"] = sub.start;
      sj["experiments"] = sub.ab_tests;
      std::vector<std::string> rule_names;
      for (const auto& r : sub.trans_rules) rule_names.push_back(emit_rule(r));
      sj["transitionRules"] = rule_names;
      b.pipelines[file_name_for(sub.id)] = dump(sj);
    }
    j["pipelines"] = pipelines;
    ordered_json conds = ordered_json::array();
    for (const auto& c : s.cond_stats) {
      conds.push_back(ordered_json::array({std::string(to_string(c.op)), c.value}));
    }
    j["conditionalStatements"] = conds;
    j["nextComponent"] = s.next_component;
    j["splitComponent"] = {{"serviceName", s.split_component.service_name},
                           {"imageName", s.split_component.image_name}};
    b.splits[file_name_for(s.name)] = dump(j);
    split_names.push_back(s.name);
  }

  ordered_json p;
  p["name"] = spec.name;
  p["startingComponent"] = spec.start;
  p["experiments"] = spec.root_test_names();
  p["transitionRules"] = root_rules;
  p["populationSplits"] = split_names;
  p["pipelines"] = sub_names;
  b.pipeline = dump(p);
  return b;
}

}  // namespace abpipe::pipeline
