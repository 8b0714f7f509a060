#pragma once

#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tempo/value.hpp"

namespace tempo {

struct ParseError : std::runtime_error {
  std::size_t position;
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"),
        position(pos) {}
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Expression tree over the temporal operators. An integer literal n stands
// for the reference-chain tap R+n (the reference spike R is 0 by
// convention, so it evaluates to n); values k..2k-1 occur only as the
// output caps of meta implicants.
struct Expr {
  enum class Kind { Var, RefConst, Delay, Bin };

  Kind kind;
  std::string name;  // Var
  int value = 0;     // RefConst
  int steps = 0;     // Delay
  OpKind op{};       // Bin
  ExprPtr lhs, rhs;  // Bin children; Delay child in lhs
};

inline ExprPtr make_var(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Var;
  e->name = std::move(name);
  return e;
}

inline ExprPtr make_ref(int value) {
  if (value < 0) throw std::invalid_argument("reference constant must be >= 0");
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::RefConst;
  e->value = value;
  return e;
}

inline ExprPtr make_delay(ExprPtr child, int steps) {
  if (steps < 1) throw std::invalid_argument("delay must be >= 1");
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Delay;
  e->steps = steps;
  e->lhs = std::move(child);
  return e;
}

inline ExprPtr make_bin(OpKind op, ExprPtr lhs, ExprPtr rhs) {
  if (!is_binary_op(op)) throw std::invalid_argument("make_bin: unary op");
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Bin;
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

namespace detail {

// Precedence, loosest to tightest: | (max), & (min), relational, postfix +n.
inline int expr_prec(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Bin:
      if (e.op == OpKind::Max) return 1;
      if (e.op == OpKind::Min) return 2;
      if (e.op == OpKind::XMin || e.op == OpKind::XMax) return 5;  // call form
      return 3;  // relational
    case Expr::Kind::Delay:
      return 4;
    default:
      return 5;
  }
}

inline const char* bin_token(OpKind op) {
  switch (op) {
    case OpKind::Min: return "&";
    case OpKind::Max: return "|";
    case OpKind::Lt: return "<";
    case OpKind::Le: return "<=";
    case OpKind::Gt: return ">";
    case OpKind::Ge: return ">=";
    case OpKind::Eq: return "==";
    case OpKind::Ne: return "!=";
    default: return nullptr;
  }
}

inline void format_rec(const Expr& e, std::string& out) {
  auto child = [&](const Expr& c, int min_prec) {
    bool parens = expr_prec(c) < min_prec;
    if (parens) out += '(';
    format_rec(c, out);
    if (parens) out += ')';
  };
  switch (e.kind) {
    case Expr::Kind::Var:
      out += e.name;
      return;
    case Expr::Kind::RefConst:
      out += std::to_string(e.value);
      return;
    case Expr::Kind::Delay:
      // A delay child keeps its parentheses so nested delays reparse as
      // written instead of merging into one postfix chain.
      child(*e.lhs, 5);
      out += '+';
      out += std::to_string(e.steps);
      return;
    case Expr::Kind::Bin: {
      if (e.op == OpKind::XMin || e.op == OpKind::XMax) {
        out += e.op == OpKind::XMin ? "xmin(" : "xmax(";
        format_rec(*e.lhs, out);
        out += ", ";
        format_rec(*e.rhs, out);
        out += ')';
        return;
      }
      int p = expr_prec(e);
      // Relational operators are non-associative; & and | associate left,
      // so a right child at equal precedence keeps its parentheses.
      child(*e.lhs, p == 3 ? p + 1 : p);
      out += ' ';
      out += bin_token(e.op);
      out += ' ';
      child(*e.rhs, p + 1);
      return;
    }
  }
}

}  // namespace detail

// Prints with minimal parentheses; parse(format(e)) rebuilds the same tree.
inline std::string format(const Expr& e) {
  std::string out;
  detail::format_rec(e, out);
  return out;
}

inline std::string format(const ExprPtr& e) { return format(*e); }

// The canonical structural key used for subexpression sharing.
inline std::string expr_key(const Expr& e) { return format(e); }

inline bool structurally_equal(const Expr& a, const Expr& b) {
  return expr_key(a) == expr_key(b);
}

namespace detail {

struct Token {
  enum class Kind {
    Ident, Int, Plus, Rel, Amp, Pipe, LParen, RParen, Comma, End
  };
  Kind kind;
  std::string text;
  std::size_t pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {  // line comment
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    std::size_t start = pos_;
    if (pos_ >= text_.size()) {
      current_ = {Token::Kind::End, "", start};
      return;
    }
    char c = text_[pos_];
    auto single = [&](Token::Kind k) {
      ++pos_;
      current_ = {k, std::string(1, c), start};
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        ++pos_;
      current_ = {Token::Kind::Ident, std::string(text_.substr(start, pos_ - start)), start};
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      current_ = {Token::Kind::Int, std::string(text_.substr(start, pos_ - start)), start};
    } else if (c == '+') {
      single(Token::Kind::Plus);
    } else if (c == '&') {
      single(Token::Kind::Amp);
    } else if (c == '|') {
      single(Token::Kind::Pipe);
    } else if (c == '(') {
      single(Token::Kind::LParen);
    } else if (c == ')') {
      single(Token::Kind::RParen);
    } else if (c == ',') {
      single(Token::Kind::Comma);
    } else if (c == '<' || c == '>') {
      ++pos_;
      std::string t(1, c);
      if (pos_ < text_.size() && text_[pos_] == '=') {
        t += '=';
        ++pos_;
      }
      current_ = {Token::Kind::Rel, t, start};
    } else if (c == '=' || c == '!') {
      ++pos_;
      if (pos_ >= text_.size() || text_[pos_] != '=')
        throw ParseError(std::string("unexpected character '") + c + "'", start);
      ++pos_;
      current_ = {Token::Kind::Rel, std::string(1, c) + "=", start};
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token current_{Token::Kind::End, "", 0};
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) {}

  ExprPtr parse_expr() {
    ExprPtr e = parse_min();
    while (lex_.peek().kind == Token::Kind::Pipe) {
      lex_.take();
      e = make_bin(OpKind::Max, e, parse_min());
    }
    return e;
  }

  void expect_end() {
    if (lex_.peek().kind != Token::Kind::End)
      throw ParseError("trailing input '" + lex_.peek().text + "'",
                       lex_.peek().pos);
  }

 private:
  ExprPtr parse_min() {
    ExprPtr e = parse_rel();
    while (lex_.peek().kind == Token::Kind::Amp) {
      lex_.take();
      e = make_bin(OpKind::Min, e, parse_rel());
    }
    return e;
  }

  static OpKind rel_op(const std::string& t) {
    if (t == "<") return OpKind::Lt;
    if (t == "<=") return OpKind::Le;
    if (t == ">") return OpKind::Gt;
    if (t == ">=") return OpKind::Ge;
    if (t == "==") return OpKind::Eq;
    return OpKind::Ne;
  }

  ExprPtr parse_rel() {
    ExprPtr e = parse_postfix();
    if (lex_.peek().kind == Token::Kind::Rel) {
      Token t = lex_.take();
      e = make_bin(rel_op(t.text), e, parse_postfix());
      if (lex_.peek().kind == Token::Kind::Rel)
        throw ParseError(
            "relational operators are non-associative; use parentheses",
            lex_.peek().pos);
    }
    return e;
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_atom();
    int steps = 0;
    while (lex_.peek().kind == Token::Kind::Plus) {
      Token plus = lex_.take();
      if (lex_.peek().kind != Token::Kind::Int)
        throw ParseError("expected delay amount after '+'", plus.pos);
      Token n = lex_.take();
      int v = std::stoi(n.text);
      if (v < 1) throw ParseError("delay must be >= 1", n.pos);
      steps += v;
    }
    return steps > 0 ? make_delay(e, steps) : e;
  }

  ExprPtr parse_atom() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::Ident: {
        if ((t.text == "xmin" || t.text == "xmax") &&
            lex_.peek().kind == Token::Kind::LParen) {
          lex_.take();
          ExprPtr a = parse_expr();
          if (lex_.peek().kind != Token::Kind::Comma)
            throw ParseError("expected ',' in " + t.text + "(...)",
                             lex_.peek().pos);
          lex_.take();
          ExprPtr b = parse_expr();
          if (lex_.peek().kind != Token::Kind::RParen)
            throw ParseError("expected ')' in " + t.text + "(...)",
                             lex_.peek().pos);
          lex_.take();
          return make_bin(t.text == "xmin" ? OpKind::XMin : OpKind::XMax, a, b);
        }
        return make_var(t.text);
      }
      case Token::Kind::Int:
        return make_ref(std::stoi(t.text));
      case Token::Kind::LParen: {
        ExprPtr e = parse_expr();
        if (lex_.peek().kind != Token::Kind::RParen)
          throw ParseError("expected ')'", lex_.peek().pos);
        lex_.take();
        return e;
      }
      default:
        throw ParseError("expected identifier, constant or '('", t.pos);
    }
  }

  Lexer lex_;
};

}  // namespace detail

inline ExprPtr parse(std::string_view text) {
  detail::Parser p(text);
  ExprPtr e = p.parse_expr();
  p.expect_end();
  return e;
}

using Env = std::map<std::string, TValue>;

// Bottom-up evaluation. Reference constants evaluate to their tap time even
// beyond k-1 (meta-implicant caps are next-cycle tap values), while delay
// nodes apply the finite unit-delay rule for the given k.
inline TValue eval(const Expr& e, const Env& env, int k) {
  switch (e.kind) {
    case Expr::Kind::Var: {
      auto it = env.find(e.name);
      if (it == env.end())
        throw std::invalid_argument("unbound variable '" + e.name + "'");
      return it->second;
    }
    case Expr::Kind::RefConst:
      return TValue::finite(e.value);
    case Expr::Kind::Delay:
      return delay_finite(eval(*e.lhs, env, k), e.steps, k);
    case Expr::Kind::Bin:
      return apply_binary(e.op, eval(*e.lhs, env, k), eval(*e.rhs, env, k));
  }
  throw std::logic_error("eval: bad node");
}

inline TValue eval(const ExprPtr& e, const Env& env, int k) {
  return eval(*e, env, k);
}

// Gate-cost report under structural subexpression sharing: every distinct
// operator subtree counts once across the whole list, variables and
// reference constants are free, delays are tallied as unit-delay elements.
struct CostReport {
  std::map<OpKind, int> ops;
  int delays = 0;
  int total = 0;
};

inline int cost_of(const CostReport& r, OpKind op) {
  auto it = r.ops.find(op);
  return it == r.ops.end() ? 0 : it->second;
}

namespace detail {

inline void count_nodes(const Expr& e, std::set<std::string>& seen,
                        CostReport& report) {
  if (e.kind == Expr::Kind::Var || e.kind == Expr::Kind::RefConst) return;
  if (!seen.insert(expr_key(e)).second) return;
  if (e.kind == Expr::Kind::Delay) {
    report.delays += e.steps;
    report.total += e.steps;
    count_nodes(*e.lhs, seen, report);
    return;
  }
  report.ops[e.op] += 1;
  report.total += 1;
  count_nodes(*e.lhs, seen, report);
  count_nodes(*e.rhs, seen, report);
}

}  // namespace detail

inline CostReport gate_cost(std::span<const ExprPtr> exprs) {
  CostReport report;
  std::set<std::string> seen;
  for (const auto& e : exprs) detail::count_nodes(*e, seen, report);
  return report;
}

inline CostReport gate_cost(const std::vector<ExprPtr>& exprs) {
  return gate_cost(std::span<const ExprPtr>(exprs));
}

inline std::string to_string(const CostReport& r) {
  std::ostringstream os;
  for (auto& [op, n] : r.ops) os << n << " " << op_name(op) << ", ";
  if (r.delays) os << r.delays << " delay, ";
  os << r.total << " total";
  return os.str();
}

namespace detail {

inline bool is_var_eq_const(const Expr& e) {
  return e.kind == Expr::Kind::Bin && e.op == OpKind::Eq &&
         e.lhs->kind == Expr::Kind::Var &&
         e.rhs->kind == Expr::Kind::RefConst;
}

inline ExprPtr rewrite_leftmost_eq(const ExprPtr& e, bool& done) {
  if (done) return e;
  if (is_var_eq_const(*e)) {
    done = true;
    // A == i  becomes  (A <= i) | (i <= A): same upper and lower bound.
    return make_bin(OpKind::Max, make_bin(OpKind::Le, e->lhs, e->rhs),
                    make_bin(OpKind::Le, e->rhs, e->lhs));
  }
  if (e->kind == Expr::Kind::Bin) {
    ExprPtr l = rewrite_leftmost_eq(e->lhs, done);
    ExprPtr r = rewrite_leftmost_eq(e->rhs, done);
    if (l != e->lhs || r != e->rhs) return make_bin(e->op, l, r);
  }
  return e;
}

}  // namespace detail

// Replaces the leftmost "Var == constant" term with the equivalent
// two-sided interval (Var <= i) | (i <= Var). Other terms pass through.
inline ExprPtr rewrite_eq_to_interval(const ExprPtr& e) {
  bool done = false;
  ExprPtr out = detail::rewrite_leftmost_eq(e, done);
  if (!done)
    throw std::invalid_argument(
        "rewrite_eq_to_interval: no 'Var == constant' term found");
  return out;
}

// Collects variable names in first-use (depth first, left to right) order.
inline void collect_vars(const Expr& e, std::vector<std::string>& out) {
  switch (e.kind) {
    case Expr::Kind::Var:
      for (const auto& n : out)
        if (n == e.name) return;
      out.push_back(e.name);
      return;
    case Expr::Kind::RefConst:
      return;
    case Expr::Kind::Delay:
      collect_vars(*e.lhs, out);
      return;
    case Expr::Kind::Bin:
      collect_vars(*e.lhs, out);
      collect_vars(*e.rhs, out);
      return;
  }
}

}  // namespace tempo
