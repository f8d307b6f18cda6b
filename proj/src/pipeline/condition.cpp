#include "abpipe/pipeline/condition.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

#include "abpipe/format.hpp"

namespace abpipe::pipeline {

std::string_view to_string(Field f) {
  switch (f) {
    case Field::PValue:
      return "p_value";
    case Field::MeanA:
      return "mean_a";
    case Field::MeanB:
      return "mean_b";
    case Field::Effect:
      return "effect";
  }
  return "?";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Lt:
      return "<";
    case CompareOp::Le:
      return "<=";
    case CompareOp::Gt:
      return ">";
    case CompareOp::Ge:
      return ">=";
    case CompareOp::Eq:
      return "==";
    case CompareOp::Ne:
      return "!=";
  }
  return "?";
}

bool parse_compare_op(std::string_view text, CompareOp& out) {
  static constexpr std::pair<std::string_view, CompareOp> kOps[] = {
      {"<=", CompareOp::Le}, {">=", CompareOp::Ge}, {"==", CompareOp::Eq},
      {"!=", CompareOp::Ne}, {"<", CompareOp::Lt},  {">", CompareOp::Gt}};
  for (const auto& [name, op] : kOps) {
    if (text == name) {
      out = op;
      return true;
    }
  }
  return false;
}

bool compare(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::Lt:
      return lhs < rhs;
    case CompareOp::Le:
      return lhs <= rhs;
    case CompareOp::Gt:
      return lhs > rhs;
    case CompareOp::Ge:
      return lhs >= rhs;
    case CompareOp::Eq:
      return lhs == rhs;
    case CompareOp::Ne:
      return lhs != rhs;
  }
  return false;
}

CompareOp negate(CompareOp op) {
  switch (op) {
    case CompareOp::Lt:
      return CompareOp::Ge;
    case CompareOp::Le:
      return CompareOp::Gt;
    case CompareOp::Gt:
      return CompareOp::Le;
    case CompareOp::Ge:
      return CompareOp::Lt;
    case CompareOp::Eq:
      return CompareOp::Ne;
    case CompareOp::Ne:
      return CompareOp::Eq;
  }
  return op;
}

ConditionSyntaxError::ConditionSyntaxError(std::size_t position, const std::string& message)
    : std::runtime_error("condition syntax error at offset " + std::to_string(position) + ": " +
                         message),
      position_(position) {}

double field_value(Field f, const stats::StatResult& r) {
  switch (f) {
    case Field::PValue:
      return r.p_value;
    case Field::MeanA:
      return r.mean_a;
    case Field::MeanB:
      return r.mean_b;
    case Field::Effect:
      return r.effect();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

using Node = Condition::Node;

struct Token {
  enum class Kind { Ident, Number, Op, LParen, RParen, End } kind;
  std::string_view text;
  std::size_t pos;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    const std::size_t start = i_;
    if (i_ >= src_.size()) return {Token::Kind::End, {}, start};
    const char c = src_[i_];
    if (c == '(') return {Token::Kind::LParen, src_.substr(i_++, 1), start};
    if (c == ')') return {Token::Kind::RParen, src_.substr(i_++, 1), start};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) {
        ++i_;
      }
      return {Token::Kind::Ident, src_.substr(start, i_ - start), start};
    }
    if (c == '<' || c == '>' || c == '=' || c == '!') {
      ++i_;
      if (i_ < src_.size() && src_[i_] == '=') ++i_;
      const auto text = src_.substr(start, i_ - start);
      CompareOp op;
      if (!parse_compare_op(text, op)) {
        throw ConditionSyntaxError(start, "unknown operator '" + std::string(text) + "'");
      }
      return {Token::Kind::Op, text, start};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      return number(start);
    }
    throw ConditionSyntaxError(start, std::string("unexpected character '") + c + "'");
  }

 private:
  Token number(std::size_t start) {
    std::size_t j = i_;
    if (src_[j] == '+' || src_[j] == '-') ++j;
    const std::size_t digits_begin = j;
    while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    if (j < src_.size() && src_[j] == '.') {
      ++j;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
    }
    if (j == digits_begin || (j == digits_begin + 1 && src_[digits_begin] == '.')) {
      throw ConditionSyntaxError(start, "malformed number");
    }
    if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
      const std::size_t exp_digits = k;
      while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
      if (k == exp_digits) throw ConditionSyntaxError(start, "malformed exponent");
      j = k;
    }
    // from_chars rejects a leading '+'
    const std::size_t parse_from = src_[i_] == '+' ? i_ + 1 : i_;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + parse_from, src_.data() + j, value);
    if (ec != std::errc() || ptr != src_.data() + j || !std::isfinite(value)) {
      throw ConditionSyntaxError(start, "malformed number");
    }
    Token t{Token::Kind::Number, src_.substr(start, j - start), start, value};
    i_ = j;
    return t;
  }

  std::string_view src_;
  std::size_t i_ = 0;
};

std::optional<Field> parse_field(std::string_view s) {
  if (s == "p_value") return Field::PValue;
  if (s == "mean_a") return Field::MeanA;
  if (s == "mean_b") return Field::MeanB;
  if (s == "effect") return Field::Effect;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { advance(); }

  Node parse() {
    if (cur_.kind == Token::Kind::End) throw ConditionSyntaxError(cur_.pos, "empty condition");
    Node n = parse_or();
    if (cur_.kind != Token::Kind::End) {
      throw ConditionSyntaxError(cur_.pos, "unexpected '" + std::string(cur_.text) + "'");
    }
    return n;
  }

 private:
  void advance() { cur_ = lexer_.next(); }

  bool at_keyword(std::string_view kw) const {
    return cur_.kind == Token::Kind::Ident && cur_.text == kw;
  }

  static void append_flat(Node& parent, Node child) {
    if (child.kind == parent.kind) {
      for (auto& c : child.children) parent.children.push_back(std::move(c));
    } else {
      parent.children.push_back(std::move(child));
    }
  }

  Node parse_or() {
    Node first = parse_and();
    if (!at_keyword("or")) return first;
    Node n;
    n.kind = Node::Kind::Or;
    append_flat(n, std::move(first));
    while (at_keyword("or")) {
      advance();
      append_flat(n, parse_and());
    }
    return n;
  }

  Node parse_and() {
    Node first = parse_term();
    if (!at_keyword("and")) return first;
    Node n;
    n.kind = Node::Kind::And;
    append_flat(n, std::move(first));
    while (at_keyword("and")) {
      advance();
      append_flat(n, parse_term());
    }
    return n;
  }

  Node parse_term() {
    if (cur_.kind == Token::Kind::LParen) {
      advance();
      Node inner = parse_or();
      if (cur_.kind != Token::Kind::RParen) throw ConditionSyntaxError(cur_.pos, "expected ')'");
      advance();
      return inner;
    }
    if (cur_.kind != Token::Kind::Ident) {
      throw ConditionSyntaxError(cur_.pos, "expected a field name or '('");
    }
    const auto field = parse_field(cur_.text);
    if (!field) {
      throw ConditionSyntaxError(cur_.pos, "unknown field '" + std::string(cur_.text) + "'");
    }
    advance();
    if (cur_.kind != Token::Kind::Op) throw ConditionSyntaxError(cur_.pos, "expected an operator");
    CompareOp op;
    parse_compare_op(cur_.text, op);
    advance();
    if (cur_.kind != Token::Kind::Number) throw ConditionSyntaxError(cur_.pos, "expected a number");
    const double value = cur_.number;
    advance();
    Node leaf;
    leaf.leaf = Comparison{*field, op, value};
    return leaf;
  }

  Lexer lexer_;
  Token cur_{Token::Kind::End, {}, 0};
};

bool eval_node(const Node& n, const stats::StatResult& r) {
  switch (n.kind) {
    case Node::Kind::Leaf:
      return compare(field_value(n.leaf.field, r), n.leaf.op, n.leaf.value);
    case Node::Kind::And:
      for (const auto& c : n.children) {
        if (!eval_node(c, r)) return false;
      }
      return true;
    case Node::Kind::Or:
      for (const auto& c : n.children) {
        if (eval_node(c, r)) return true;
      }
      return false;
  }
  return false;
}

void print_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Leaf:
      out += to_string(n.leaf.field);
      out += ' ';
      out += to_string(n.leaf.op);
      out += ' ';
      out += format_double(n.leaf.value);
      return;
    case Node::Kind::And:
    case Node::Kind::Or: {
      const bool is_and = n.kind == Node::Kind::And;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i > 0) out += is_and ? " and " : " or ";
        const auto& c = n.children[i];
        const bool wrap = c.kind != Node::Kind::Leaf;
        if (wrap) out += '(';
        print_node(c, out);
        if (wrap) out += ')';
      }
      return;
    }
  }
}

std::vector<Conjunction> dnf_of(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Leaf:
      return {{n.leaf}};
    case Node::Kind::Or: {
      std::vector<Conjunction> out;
      for (const auto& c : n.children) {
        auto sub = dnf_of(c);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    case Node::Kind::And: {
      std::vector<Conjunction> acc{{}};
      for (const auto& c : n.children) {
        const auto sub = dnf_of(c);
        std::vector<Conjunction> next;
        next.reserve(acc.size() * sub.size());
        for (const auto& left : acc) {
          for (const auto& right : sub) {
            Conjunction merged = left;
            merged.insert(merged.end(), right.begin(), right.end());
            next.push_back(std::move(merged));
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
  }
  return {};
}

Node negate_node(const Node& n) {
  Node out;
  switch (n.kind) {
    case Node::Kind::Leaf:
      out.leaf = Comparison{n.leaf.field, negate(n.leaf.op), n.leaf.value};
      return out;
    case Node::Kind::And:
    case Node::Kind::Or:
      out.kind = n.kind == Node::Kind::And ? Node::Kind::Or : Node::Kind::And;
      for (const auto& c : n.children) out.children.push_back(negate_node(c));
      return out;
  }
  return out;
}

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  bool lo_strict = false;
  double hi = std::numeric_limits<double>::infinity();
  bool hi_strict = false;
  std::vector<double> excluded;

  void lower(double v, bool strict) {
    if (v > lo) {
      lo = v;
      lo_strict = strict;
    } else if (v == lo) {
      lo_strict = lo_strict || strict;
    }
  }
  void upper(double v, bool strict) {
    if (v < hi) {
      hi = v;
      hi_strict = strict;
    } else if (v == hi) {
      hi_strict = hi_strict || strict;
    }
  }
  bool empty() const {
    if (lo > hi) return true;
    if (lo == hi) {
      if (lo_strict || hi_strict) return true;
      for (double x : excluded) {
        if (x == lo) return true;
      }
    }
    return false;
  }
};

}  // namespace

Condition::Condition() {
  root_.leaf = Comparison{Field::PValue, CompareOp::Ge, 0.0};
}

Condition Condition::parse(std::string_view text) { return Condition(Parser(text).parse()); }

Condition Condition::from_node(Node root) { return Condition(std::move(root)); }

bool Condition::evaluate(const stats::StatResult& result) const { return eval_node(root_, result); }

std::string Condition::to_string() const {
  std::string out;
  print_node(root_, out);
  return out;
}

std::vector<Conjunction> Condition::to_dnf() const { return dnf_of(root_); }

Condition Condition::negated() const { return Condition(negate_node(root_)); }

bool satisfiable(const Conjunction& conj) {
  Interval iv[4];
  iv[static_cast<int>(Field::PValue)].lower(0.0, false);
  iv[static_cast<int>(Field::PValue)].upper(1.0, false);
  for (const auto& c : conj) {
    Interval& i = iv[static_cast<int>(c.field)];
    switch (c.op) {
      case CompareOp::Lt:
        i.upper(c.value, true);
        break;
      case CompareOp::Le:
        i.upper(c.value, false);
        break;
      case CompareOp::Gt:
        i.lower(c.value, true);
        break;
      case CompareOp::Ge:
        i.lower(c.value, false);
        break;
      case CompareOp::Eq:
        i.lower(c.value, false);
        i.upper(c.value, false);
        break;
      case CompareOp::Ne:
        i.excluded.push_back(c.value);
        break;
    }
  }
  for (const auto& i : iv) {
    if (i.empty()) return false;
  }
  return true;
}

bool satisfiable(const std::vector<Conjunction>& dnf) {
  for (const auto& c : dnf) {
    if (satisfiable(c)) return true;
  }
  return false;
}

bool overlaps(const Condition& a, const Condition& b) {
  for (const auto& ca : a.to_dnf()) {
    for (const auto& cb : b.to_dnf()) {
      Conjunction both = ca;
      both.insert(both.end(), cb.begin(), cb.end());
      if (satisfiable(both)) return true;
    }
  }
  return false;
}

bool exhaustive(const std::vector<const Condition*>& conditions) {
  if (conditions.empty()) return false;
  Node all;
  all.kind = Node::Kind::And;
  for (const auto* c : conditions) all.children.push_back(c->negated().root());
  return !satisfiable(Condition::from_node(std::move(all)).to_dnf());
}

}  // namespace abpipe::pipeline
