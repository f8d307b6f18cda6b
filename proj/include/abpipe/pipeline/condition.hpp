#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abpipe/stats/hypothesis.hpp"

namespace abpipe::pipeline {

enum class Field { PValue, MeanA, MeanB, Effect };
enum class CompareOp { Lt, Le, Gt, Ge, Eq, Ne };

std::string_view to_string(Field f);
std::string_view to_string(CompareOp op);
bool parse_compare_op(std::string_view text, CompareOp& out);
bool compare(double lhs, CompareOp op, double rhs);
CompareOp negate(CompareOp op);

struct Comparison {
  Field field;
  CompareOp op;
  double value;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

// Thrown for malformed condition text; `position` is the 0-based byte offset.
class ConditionSyntaxError : public std::runtime_error {
 public:
  ConditionSyntaxError(std::size_t position, const std::string& message);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// A conjunction of comparisons; a DNF is a disjunction of these.
using Conjunction = std::vector<Comparison>;

// Boolean condition over a StatResult:
//
//   expr  := term (("and" | "or") term)*
//   term  := field op number | "(" expr ")"
//   field := p_value | mean_a | mean_b | effect
//   op    := < | <= | > | >= | == | !=
//
// "and" binds tighter than "or". `effect` is mean_b - mean_a.
class Condition {
 public:
  struct Node {
    enum class Kind { Leaf, And, Or } kind = Kind::Leaf;
    Comparison leaf{Field::PValue, CompareOp::Le, 0.0};
    std::vector<Node> children;

    friend bool operator==(const Node&, const Node&) = default;
  };

  // Always-true condition (empty text is not accepted by parse()).
  Condition();
  static Condition parse(std::string_view text);
  static Condition from_node(Node root);

  bool evaluate(const stats::StatResult& result) const;
  // Canonical text; parse(c.to_string()) == c.
  std::string to_string() const;
  const Node& root() const { return root_; }

  std::vector<Conjunction> to_dnf() const;
  Condition negated() const;

  friend bool operator==(const Condition& a, const Condition& b) { return a.root_ == b.root_; }

 private:
  explicit Condition(Node root) : root_(std::move(root)) {}
  Node root_;
};

double field_value(Field f, const stats::StatResult& r);

// Whether some assignment of the fields satisfies every comparison. p_value is
// confined to [0, 1]; the other fields range over the reals and are treated
// as independent, so the answer may over-approximate.
bool satisfiable(const Conjunction& conj);
bool satisfiable(const std::vector<Conjunction>& dnf);
// Whether a and b can hold simultaneously.
bool overlaps(const Condition& a, const Condition& b);
// Whether at least one of the conditions holds for every StatResult.
bool exhaustive(const std::vector<const Condition*>& conditions);

}  // namespace abpipe::pipeline
