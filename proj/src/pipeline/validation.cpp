#include "abpipe/pipeline/validation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace abpipe::pipeline {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DanglingReference:
      return "dangling reference";
    case ViolationKind::DuplicateName:
      return "duplicate name";
    case ViolationKind::BadAssignmentFractions:
      return "bad assignment fractions";
    case ViolationKind::InvalidTest:
      return "invalid test";
    case ViolationKind::OverlappingRules:
      return "overlapping rules";
    case ViolationKind::InvalidSplit:
      return "invalid split";
    case ViolationKind::NonExclusiveSplitConditions:
      return "non-exclusive split conditions";
    case ViolationKind::InterferingSubPipelines:
      return "interfering sub-pipelines";
    case ViolationKind::NestedSplit:
      return "nested split";
    case ViolationKind::Cycle:
      return "cycle";
    case ViolationKind::UnreachableEnd:
      return "unreachable End";
  }
  return "?";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.kind == kind; });
}

std::vector<std::string> ValidationReport::lines() const {
  std::vector<std::string> out;
  for (const auto& v : violations) out.push_back(std::string(to_string(v.kind)) + ": " + v.message);
  return out;
}

std::vector<int> representative_classes(const std::vector<SplitCondition>& conditions) {
  std::set<int> out;
  for (const auto& c : conditions) {
    for (long long d = -1; d <= 1; ++d) {
      const long long v = static_cast<long long>(c.value) + d;
      if (v >= std::numeric_limits<int>::min() && v <= std::numeric_limits<int>::max()) {
        out.insert(static_cast<int>(v));
      }
    }
  }
  return {out.begin(), out.end()};
}

namespace {

struct Scope {
  std::string id;
  std::string start;
  std::set<std::string> tests;
  const std::vector<TransitionRule>* rules;
  bool root;
};

class Validator {
 public:
  explicit Validator(const PipelineSpec& spec) : spec_(spec) {}

  ValidationReport run() {
    check_names();
    for (const auto& t : spec_.ab_tests) check_test(t);

    Scope root{spec_.name, spec_.start, {}, &spec_.trans_rules, true};
    for (const auto& n : spec_.root_test_names()) root.tests.insert(n);
    check_scope(root);

    for (const auto& split : spec_.pop_splits) {
      check_split(split);
      for (const auto& sub : split.sub_pipelines) {
        Scope s{sub.id, sub.start, {sub.ab_tests.begin(), sub.ab_tests.end()}, &sub.trans_rules,
                false};
        check_scope(s);
      }
    }
    return std::move(report_);
  }

 private:
  void add(ViolationKind kind, const std::string& element, const std::string& message) {
    report_.violations.push_back({kind, element, message});
  }

  void check_names() {
    std::map<std::string, int> names;
    for (const auto& t : spec_.ab_tests) ++names[t.name];
    for (const auto& s : spec_.pop_splits) ++names[s.name];
    for (const auto& [name, count] : names) {
      if (count > 1) add(ViolationKind::DuplicateName, name, "'" + name + "' is declared " +
                                                                 std::to_string(count) + " times");
      if (is_end(name) || name == "Start" || name.empty()) {
        add(ViolationKind::DuplicateName, name, "'" + name + "' is a reserved name");
      }
    }
    std::map<std::string, int> subs;
    for (const auto& s : spec_.pop_splits) {
      for (const auto& sub : s.sub_pipelines) ++subs[sub.id];
    }
    for (const auto& [id, count] : subs) {
      if (count > 1 || id == spec_.name || names.contains(id)) {
        add(ViolationKind::DuplicateName, id, "sub-pipeline id '" + id + "' is not unique");
      }
    }
  }

  void check_test(const ABTestSpec& t) {
    const double a = t.ab_assignment.a;
    const double b = t.ab_assignment.b;
    if (!(a >= 0.0 && a <= 1.0) || !(b >= 0.0 && b <= 1.0) || std::fabs(a + b - 1.0) > 1e-9) {
      add(ViolationKind::BadAssignmentFractions, t.name,
          "test '" + t.name + "' assignment fractions must lie in [0, 1] and sum to 1");
    }
    if (t.exp_length < 1) {
      add(ViolationKind::InvalidTest, t.name, "test '" + t.name + "' has zero experiment length");
    }
    if (!(t.hypothesis.alpha > 0.0 && t.hypothesis.alpha < 1.0)) {
      add(ViolationKind::InvalidTest, t.name, "test '" + t.name + "' alpha must lie in (0, 1)");
    }
    if (std::find(t.ab_metrics.begin(), t.ab_metrics.end(), t.hypothesis.metric) ==
        t.ab_metrics.end()) {
      add(ViolationKind::InvalidTest, t.name,
          "test '" + t.name + "' hypothesis metric '" + t.hypothesis.metric +
              "' is not among its metrics");
    }
    if (t.variant_a.empty() || t.variant_b.empty() || t.component.empty()) {
      add(ViolationKind::InvalidTest, t.name,
          "test '" + t.name + "' must name a component and both variants");
    }
  }

  // Whether `name` is a legal rule target / start element in `scope`.
  bool in_scope(const Scope& scope, const std::string& name) const {
    if (is_end(name) || scope.tests.contains(name)) return true;
    return scope.root && spec_.find_split(name) != nullptr;
  }

  void check_reference(const Scope& scope, const std::string& name, const std::string& where) {
    if (in_scope(scope, name)) return;
    if (!scope.root && spec_.find_split(name)) {
      add(ViolationKind::NestedSplit, name,
          where + " enters split '" + name + "' from inside sub-pipeline '" + scope.id + "'");
      return;
    }
    const bool declared = spec_.kind_of(name) != ElementKind::Unknown;
    add(ViolationKind::DanglingReference, name,
        where + " references '" + name + "', which is " +
            (declared ? "not part of scope '" + scope.id + "'" : std::string("not declared")));
  }

  void check_scope(const Scope& scope) {
    const auto& rules = *scope.rules;
    if (!scope.root && !scope.tests.contains(scope.start)) {
      check_reference(scope, scope.start, "sub-pipeline '" + scope.id + "' start");
      if (!spec_.find_split(scope.start)) {
        add(ViolationKind::DanglingReference, scope.start,
            "sub-pipeline '" + scope.id + "' start must be one of its tests");
      }
    } else {
      check_reference(scope, scope.start, "pipeline '" + scope.id + "' start");
    }
    for (const auto& t : scope.tests) {
      if (!spec_.find_test(t)) {
        add(ViolationKind::DanglingReference, t,
            "scope '" + scope.id + "' lists undeclared test '" + t + "'");
      }
    }
    for (const auto& r : rules) {
      const std::string where = "rule '" + r.name + "'";
      if (!is_end(r.assoc_ab_test) && !scope.tests.contains(r.assoc_ab_test)) {
        const bool declared = spec_.kind_of(r.assoc_ab_test) != ElementKind::Unknown;
        add(ViolationKind::DanglingReference, r.assoc_ab_test,
            where + " is associated with '" + r.assoc_ab_test + "', which is " +
                (declared ? "not a test of scope '" + scope.id + "'" : std::string("not declared")));
      }
      check_reference(scope, r.subseq_ab_test, where);
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
      for (std::size_t j = i + 1; j < rules.size(); ++j) {
        if (rules[i].assoc_ab_test != rules[j].assoc_ab_test) continue;
        if (overlaps(rules[i].cond_stat, rules[j].cond_stat)) {
          add(ViolationKind::OverlappingRules, rules[i].assoc_ab_test,
              "rules '" + rules[i].name + "' and '" + rules[j].name +
                  "' can both apply to a result of '" + rules[i].assoc_ab_test + "'");
        }
      }
    }
    check_flow(scope);
  }

  // Reachability of End and acyclicity, treating "no rule applies" as an edge to End.
  void check_flow(const Scope& scope) {
    const std::string end(kEnd);
    auto successors = [&](const std::string& node) {
      std::vector<std::string> out;
      if (const auto* split = spec_.find_split(node); split && scope.root) {
        out.push_back(is_end(split->next_component) ? end : split->next_component);
        return out;
      }
      std::vector<const Condition*> conds;
      for (const auto& r : *scope.rules) {
        if (r.assoc_ab_test != node) continue;
        conds.push_back(&r.cond_stat);
        if (in_scope(scope, r.subseq_ab_test)) {
          out.push_back(is_end(r.subseq_ab_test) ? end : r.subseq_ab_test);
        }
      }
      if (!exhaustive(conds)) out.push_back(end);
      return out;
    };

    if (!in_scope(scope, scope.start)) return;
    const std::string start = is_end(scope.start) ? end : scope.start;
    enum class Color { White, Grey, Black };
    std::map<std::string, Color> color;
    bool end_reached = false;
    std::set<std::string> reported;

    // iterative DFS so deep pipelines cannot overflow the stack
    struct Frame {
      std::string node;
      std::vector<std::string> next;
      std::size_t i = 0;
    };
    std::vector<Frame> stack;
    auto push = [&](const std::string& n) {
      color[n] = Color::Grey;
      stack.push_back({n, n == end ? std::vector<std::string>{} : successors(n), 0});
    };
    push(start);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.node == end) end_reached = true;
      if (f.i == f.next.size()) {
        color[f.node] = Color::Black;
        stack.pop_back();
        continue;
      }
      const std::string n = f.next[f.i++];
      const Color c = color.contains(n) ? color[n] : Color::White;
      if (c == Color::Grey) {
        if (reported.insert(n).second) {
          add(ViolationKind::Cycle, n,
              "'" + n + "' can be re-entered in scope '" + scope.id + "'");
        }
      } else if (c == Color::White) {
        push(n);
      }
    }
    if (!end_reached) {
      add(ViolationKind::UnreachableEnd, scope.id,
          "End is not reachable from '" + scope.start + "' in scope '" + scope.id + "'");
    }
  }

  void check_split(const PopulationSplitSpec& split) {
    if (split.sub_pipelines.size() < 2 || split.sub_pipelines.size() != split.cond_stats.size()) {
      add(ViolationKind::InvalidSplit, split.name,
          "split '" + split.name + "' needs one condition per sub-pipeline and at least two");
    }
    for (int cls : representative_classes(split.cond_stats)) {
      int matched = 0;
      for (const auto& c : split.cond_stats) matched += c.matches(cls) ? 1 : 0;
      if (matched > 1) {
        add(ViolationKind::NonExclusiveSplitConditions, split.name,
            "split '" + split.name + "': class " + std::to_string(cls) + " satisfies " +
                std::to_string(matched) + " conditions");
        break;
      }
    }
    const auto& subs = split.sub_pipelines;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      for (std::size_t j = i + 1; j < subs.size(); ++j) check_interference(split, subs[i], subs[j]);
    }
    Scope root{spec_.name, spec_.start, {}, &spec_.trans_rules, true};
    for (const auto& n : spec_.root_test_names()) root.tests.insert(n);
    check_reference(root, split.next_component, "split '" + split.name + "' nextComponent");
  }

  void check_interference(const PopulationSplitSpec& split, const SubPipeline& x,
                          const SubPipeline& y) {
    auto resources = [&](const SubPipeline& s) {
      std::set<std::string> tests(s.ab_tests.begin(), s.ab_tests.end());
      std::set<std::string> components;
      std::set<std::string> variants;
      for (const auto& name : s.ab_tests) {
        if (const auto* t = spec_.find_test(name)) {
          components.insert(t->component);
          variants.insert(t->variant_a);
          variants.insert(t->variant_b);
        }
      }
      return std::tuple{tests, components, variants};
    };
    const auto [tx, cx, vx] = resources(x);
    const auto [ty, cy, vy] = resources(y);
    auto first_shared = [](const std::set<std::string>& a, const std::set<std::string>& b) {
      for (const auto& e : a) {
        if (b.contains(e)) return e;
      }
      return std::string();
    };
    const std::pair<std::string, std::string> shared[] = {
        {"test", first_shared(tx, ty)},
        {"component", first_shared(cx, cy)},
        {"variant", first_shared(vx, vy)}};
    for (const auto& [what, name] : shared) {
      if (name.empty()) continue;
      add(ViolationKind::InterferingSubPipelines, split.name,
          "split '" + split.name + "': sub-pipelines '" + x.id + "' and '" + y.id + "' share " +
              what + " '" + name + "'");
      return;
    }
  }

  const PipelineSpec& spec_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate(const PipelineSpec& spec) { return Validator(spec).run(); }

}  // namespace abpipe::pipeline
