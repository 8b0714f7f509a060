#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tempo/expr.hpp"
#include "tempo/text.hpp"
#include "tempo/value.hpp"

namespace tempo {

// A gate input is a wire, optionally tagged as next-cycle-referenced: the
// consuming gate then sees the wire's spike shifted by one gamma period
// (time + k). Meta-implicant caps use this to tap the reference chain of
// the following cycle.
struct GateInput {
  std::string wire;
  bool next_cycle = false;

  bool operator==(const GateInput&) const = default;
};

struct Gate {
  std::string out;
  OpKind op{};
  int delay_steps = 1;  // used when op == Delay
  std::vector<GateInput> inputs;
};

// A feedforward gate network. Gates have zero delay except explicit delay
// elements; wires are named, and every gate drives the wire named by `out`.
struct Netlist {
  int k = 4;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<Gate> gates;
};

// One volley: at most one spike per line, inf meaning no spike this cycle.
using Volley = std::map<std::string, TValue>;

inline int op_arity(OpKind op) { return is_binary_op(op) ? 2 : 1; }

// Structural checks: defined wires, arities, duplicate drivers, acyclicity.
// Returns one message per violation; empty means the netlist is well formed.
inline std::vector<std::string> validate(const Netlist& nl) {
  std::vector<std::string> diags;
  if (nl.k < 2) diags.push_back("k must be >= 2");
  std::map<std::string, int> driver;  // wire -> gate index, -1 for inputs
  for (const auto& in : nl.inputs) {
    if (!driver.emplace(in, -1).second)
      diags.push_back("duplicate input line '" + in + "'");
  }
  for (std::size_t i = 0; i < nl.gates.size(); ++i) {
    const Gate& g = nl.gates[i];
    if (!driver.emplace(g.out, static_cast<int>(i)).second)
      diags.push_back("wire '" + g.out + "' driven more than once");
    if (static_cast<int>(g.inputs.size()) != op_arity(g.op))
      diags.push_back("gate '" + g.out + "': " + op_name(g.op) + " takes " +
                      std::to_string(op_arity(g.op)) + " input(s), got " +
                      std::to_string(g.inputs.size()));
    if (g.op == OpKind::Delay && g.delay_steps < 1)
      diags.push_back("gate '" + g.out + "': delay steps must be >= 1");
  }
  for (const Gate& g : nl.gates)
    for (const GateInput& in : g.inputs)
      if (!driver.count(in.wire))
        diags.push_back("gate '" + g.out + "': dangling wire '" + in.wire + "'");
  for (const auto& out : nl.outputs)
    if (!driver.count(out))
      diags.push_back("output line '" + out + "' is not driven");

  // Cycle check over gate-to-gate edges.
  enum { White, Grey, Black };
  std::vector<int> color(nl.gates.size(), White);
  std::vector<int> stack;
  for (std::size_t root = 0; root < nl.gates.size(); ++root) {
    if (color[root] != White) continue;
    stack.push_back(static_cast<int>(root));
    while (!stack.empty()) {
      int i = stack.back();
      if (color[i] == White) {
        color[i] = Grey;
        for (const GateInput& in : nl.gates[i].inputs) {
          auto it = driver.find(in.wire);
          if (it == driver.end() || it->second < 0) continue;
          int j = it->second;
          if (color[j] == Grey) {
            diags.push_back("cycle through gate '" + nl.gates[j].out + "'");
          } else if (color[j] == White) {
            stack.push_back(j);
          }
        }
      } else {
        color[i] = Black;
        stack.pop_back();
      }
    }
  }
  return diags;
}

// Evaluates volleys against a fixed netlist. Construction validates and
// computes a topological order once; eval itself is pure.
class NetlistEvaluator {
 public:
  explicit NetlistEvaluator(const Netlist& nl) : nl_(nl) {
    auto diags = validate(nl);
    if (!diags.empty())
      throw std::invalid_argument("invalid netlist: " + diags.front());
    for (std::size_t i = 0; i < nl.gates.size(); ++i)
      driver_[nl.gates[i].out] = static_cast<int>(i);
    order_.reserve(nl.gates.size());
    std::vector<char> done(nl.gates.size(), 0);
    for (std::size_t i = 0; i < nl.gates.size(); ++i) visit(static_cast<int>(i), done);
  }

  Volley eval(const Volley& volley) const {
    std::map<std::string, TValue> wires;
    for (const auto& in : nl_.inputs) {
      auto it = volley.find(in);
      if (it == volley.end())
        throw std::invalid_argument("unbound input line '" + in + "'");
      wires[in] = it->second;
    }
    for (int gi : order_) {
      const Gate& g = nl_.gates[gi];
      auto value_of = [&](const GateInput& in) {
        TValue v = wires.at(in.wire);
        if (in.next_cycle && v.is_finite())
          v = TValue::finite(v.time() + nl_.k);
        return v;
      };
      TValue out;
      if (is_binary_op(g.op)) {
        out = apply_binary(g.op, value_of(g.inputs[0]), value_of(g.inputs[1]));
      } else if (g.op == OpKind::Delay) {
        out = delay_finite(value_of(g.inputs[0]), g.delay_steps, nl_.k);
      } else if (g.op == OpKind::Identity) {
        out = value_of(g.inputs[0]);
      } else {  // Dec: the deliberately non-causal test gate
        TValue v = value_of(g.inputs[0]);
        out = v.is_inf() ? v : TValue::finite(std::max<std::int64_t>(0, v.time() - 1));
      }
      wires[g.out] = out;
    }
    Volley result;
    for (const auto& out : nl_.outputs) result[out] = wires.at(out);
    return result;
  }

  const Netlist& netlist() const { return nl_; }

 private:
  void visit(int i, std::vector<char>& done) {
    if (done[i]) return;
    done[i] = 1;
    for (const GateInput& in : nl_.gates[i].inputs) {
      auto it = driver_.find(in.wire);
      if (it != driver_.end()) visit(it->second, done);
    }
    order_.push_back(i);
  }

  const Netlist& nl_;
  std::map<std::string, int> driver_;
  std::vector<int> order_;
};

inline Volley evaluate(const Netlist& nl, const Volley& volley) {
  return NetlistEvaluator(nl).eval(volley);
}

struct AxiomViolation {
  std::string axiom;   // "causality-i", "causality-ii", "invariance"
  std::string output;
  std::vector<TValue> inputs;
  std::string detail;
};

inline std::string to_string(const AxiomViolation& v) {
  std::string s = v.axiom + " on output '" + v.output + "' at (";
  for (std::size_t i = 0; i < v.inputs.size(); ++i)
    s += (i ? "," : "") + to_string(v.inputs[i]);
  return s + "): " + v.detail;
}

// Exhaustively sweeps all (k+1)^q volleys and checks, per output function,
// both causality clauses and the finite invariance rule. Returns the first
// violation found, or nullopt when the netlist is a space-time function on
// every output. Pass always means exhaustive; larger domains are rejected.
inline std::optional<AxiomViolation> check_st_axioms(
    const Netlist& nl, long long max_tuples = 10'000'000) {
  NetlistEvaluator ev(nl);
  const int k = nl.k;
  const int q = static_cast<int>(nl.inputs.size());
  long long count = 1;
  for (int i = 0; i < q; ++i) {
    count *= k + 1;
    if (count > max_tuples)
      throw DomainTooLarge("check_st_axioms: (k+1)^q exceeds cap");
  }
  std::vector<int> digits(q, 0);
  for (long long n = 0; n < count; ++n) {
    Volley volley;
    std::vector<TValue> tuple(q);
    for (int i = 0; i < q; ++i) {
      tuple[i] = digits[i] == k ? TValue::inf() : TValue::finite(digits[i]);
      volley[nl.inputs[i]] = tuple[i];
    }
    Volley out = ev.eval(volley);

    // causality (ii): a finite output is no earlier than the first input.
    TValue earliest = TValue::inf();
    for (const TValue& v : tuple) earliest = std::min(earliest, v);
    for (const auto& [name, z] : out) {
      if (z.is_finite() && z < earliest)
        return AxiomViolation{"causality-ii", name, tuple,
                              "output " + to_string(z) + " precedes earliest input " +
                                  to_string(earliest)};
    }

    // causality (i): inputs later than the output cannot matter.
    for (int j = 0; j < q; ++j) {
      bool any_later = false;
      for (const auto& [name, z] : out)
        if (tuple[j] > z) any_later = true;
      if (!any_later) continue;
      Volley masked = volley;
      masked[nl.inputs[j]] = TValue::inf();
      Volley out2 = ev.eval(masked);
      for (const auto& [name, z] : out) {
        if (tuple[j] > z && out2.at(name) != z)
          return AxiomViolation{
              "causality-i", name, tuple,
              "masking input '" + nl.inputs[j] + "' changed output from " +
                  to_string(z) + " to " + to_string(out2.at(name))};
      }
    }

    // finite invariance: F(shifted volley) == shift(F(volley)).
    Volley shifted;
    for (int i = 0; i < q; ++i)
      shifted[nl.inputs[i]] = unit_shift(tuple[i], k);
    Volley out3 = ev.eval(shifted);
    for (const auto& [name, z] : out) {
      TValue expected = unit_shift(z, k);
      if (out3.at(name) != expected)
        return AxiomViolation{"invariance", name, tuple,
                              "expected " + to_string(expected) + ", got " +
                                  to_string(out3.at(name))};
    }

    for (int i = q - 1; i >= 0; --i) {
      if (++digits[i] <= k) break;
      digits[i] = 0;
    }
  }
  return std::nullopt;
}

namespace detail {

class NetlistBuilder {
 public:
  NetlistBuilder(int k, std::string ref_name)
      : k_(k), ref_(std::move(ref_name)) {
    nl_.k = k;
    nl_.inputs.push_back(ref_);
    // The shared gamma delay chain provides taps 1..k-1; tap 0 is the
    // reference input itself.
    for (int i = 1; i < k; ++i) {
      Gate g;
      g.out = tap_wire(i);
      g.op = OpKind::Delay;
      g.delay_steps = 1;
      g.inputs = {GateInput{i == 1 ? ref_ : tap_wire(i - 1), false}};
      nl_.gates.push_back(std::move(g));
    }
  }

  std::string tap_wire(int i) const {
    return i == 0 ? ref_ : "_t" + std::to_string(i);
  }

  GateInput emit(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Var: {
        add_input(e->name);
        return {e->name, false};
      }
      case Expr::Kind::RefConst: {
        int n = e->value;
        if (n < 0 || n > 2 * k_ - 1)
          throw std::invalid_argument("reference constant " +
                                      std::to_string(n) +
                                      " outside [0, 2k-1] for k=" +
                                      std::to_string(k_));
        if (n <= k_ - 1) return {tap_wire(n), false};
        return {tap_wire(n - k_), true};  // next cycle's tap
      }
      case Expr::Kind::Delay: {
        std::string key = expr_key(*e);
        if (auto it = cse_.find(key); it != cse_.end()) return it->second;
        GateInput src = emit(e->lhs);
        // A c-step delay is c composed unit delays.
        for (int i = 0; i < e->steps; ++i) {
          Gate g;
          g.out = fresh_wire();
          g.op = OpKind::Delay;
          g.delay_steps = 1;
          g.inputs = {src};
          nl_.gates.push_back(g);
          src = {g.out, false};
        }
        cse_[key] = src;
        return src;
      }
      case Expr::Kind::Bin: {
        std::string key = expr_key(*e);
        if (auto it = cse_.find(key); it != cse_.end()) return it->second;
        GateInput a = emit(e->lhs);
        GateInput b = emit(e->rhs);
        Gate g;
        g.out = fresh_wire();
        g.op = e->op;
        g.inputs = {a, b};
        nl_.gates.push_back(g);
        GateInput out{g.out, false};
        cse_[key] = out;
        return out;
      }
    }
    throw std::logic_error("emit: bad node");
  }

  void add_output(const std::string& name, const ExprPtr& root) {
    GateInput src = emit(root);
    if (!src.next_cycle && src.wire == name) {
      nl_.outputs.push_back(name);  // plain pass-through
      return;
    }
    // Rename through an identity gate unless the wire is an unshared
    // internal gate output we can relabel in place.
    if (!src.next_cycle && src.wire.rfind("_g", 0) == 0 && !used_.count(name)) {
      rename_wire(src.wire, name);
      cse_[expr_key(*root)] = {name, false};
      nl_.outputs.push_back(name);
      return;
    }
    Gate g;
    g.out = name;
    g.op = OpKind::Identity;
    g.inputs = {src};
    nl_.gates.push_back(g);
    nl_.outputs.push_back(name);
  }

  Netlist take() { return std::move(nl_); }

 private:
  void add_input(const std::string& name) {
    if (used_.insert(name).second) nl_.inputs.push_back(name);
  }

  std::string fresh_wire() { return "_g" + std::to_string(++counter_); }

  void rename_wire(const std::string& from, const std::string& to) {
    for (Gate& g : nl_.gates) {
      if (g.out == from) g.out = to;
      for (GateInput& in : g.inputs)
        if (in.wire == from) in.wire = to;
    }
    for (auto& [key, gi] : cse_)
      if (gi.wire == from) gi.wire = to;
  }

  int k_;
  std::string ref_;
  Netlist nl_;
  std::map<std::string, GateInput> cse_;
  std::set<std::string> used_;
  int counter_ = 0;
};

}  // namespace detail

// Compiles named expressions into one netlist sharing a single gamma delay
// chain (taps 1..k-1 from the reference input R) and any common
// subexpressions. Constants up to k-1 connect to chain taps; caps in
// k..2k-1 connect to tap n-k flagged as next-cycle-referenced.
inline Netlist expr_to_netlist(
    const std::vector<std::pair<std::string, ExprPtr>>& exprs, int k,
    const std::string& ref_name = "R") {
  detail::NetlistBuilder builder(k, ref_name);
  for (const auto& [name, e] : exprs) builder.add_output(name, e);
  return builder.take();
}

// Gates that are not part of the shared gamma chain; this is the count
// comparable against the expression-level gate cost.
inline int data_gate_count(const Netlist& nl) {
  int n = 0;
  for (const Gate& g : nl.gates)
    if (g.out.rfind("_t", 0) != 0) ++n;
  return n;
}

inline std::string format(const Netlist& nl) {
  std::ostringstream os;
  os << "k=" << nl.k << "\n";
  os << "inputs:";
  for (std::size_t i = 0; i < nl.inputs.size(); ++i)
    os << (i ? "," : "") << " " << nl.inputs[i];
  os << "\n";
  os << "outputs:";
  for (std::size_t i = 0; i < nl.outputs.size(); ++i)
    os << (i ? "," : "") << " " << nl.outputs[i];
  os << "\n";
  for (const Gate& g : nl.gates) {
    os << g.out << " = " << op_name(g.op);
    if (g.op == OpKind::Delay) os << g.delay_steps;
    os << "(";
    for (std::size_t i = 0; i < g.inputs.size(); ++i) {
      os << (i ? ", " : "") << g.inputs[i].wire;
      if (g.inputs[i].next_cycle) os << "+k";
    }
    os << ")\n";
  }
  return os.str();
}

// Parses the netlist text format: "k=<int>", "inputs: a,b", "outputs: x",
// then one "<out> = <op>(<in>[,<in>])" line per gate. An input token may
// carry the "+k" suffix marking a next-cycle tap reference.
inline Netlist parse_netlist(std::string_view content) {
  Netlist nl;
  bool have_k = false;
  text::for_each_line(content, [&](std::size_t lineno, std::string_view line) {
    auto err = [&](const std::string& msg) {
      throw ParseError("netlist line " + std::to_string(lineno) + ": " + msg,
                       lineno);
    };
    std::string s(line);
    if (s.rfind("k=", 0) == 0) {
      nl.k = std::stoi(s.substr(2));
      have_k = true;
      return;
    }
    if (s.rfind("inputs:", 0) == 0) {
      for (auto& name : text::split(s.substr(7), ',')) {
        if (!text::is_identifier(name)) err("bad input name '" + name + "'");
        nl.inputs.push_back(name);
      }
      return;
    }
    if (s.rfind("outputs:", 0) == 0) {
      for (auto& name : text::split(s.substr(8), ',')) {
        if (!text::is_identifier(name)) err("bad output name '" + name + "'");
        nl.outputs.push_back(name);
      }
      return;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) err("expected '<out> = <op>(...)'");
    std::string out(text::trim(std::string_view(s).substr(0, eq)));
    if (!text::is_identifier(out)) err("bad wire name '" + out + "'");
    std::string rhs(text::trim(std::string_view(s).substr(eq + 1)));
    auto open = rhs.find('(');
    if (open == std::string::npos || rhs.back() != ')')
      err("expected '<op>(<inputs>)'");
    std::string opname(text::trim(std::string_view(rhs).substr(0, open)));
    Gate g;
    g.out = out;
    if (opname.rfind("delay", 0) == 0 && opname != "delay") {
      g.op = OpKind::Delay;
      g.delay_steps = std::stoi(opname.substr(5));
    } else if (opname == "delay") {
      g.op = OpKind::Delay;
      g.delay_steps = 1;
    } else if (auto op = op_from_name(opname)) {
      g.op = *op;
    } else {
      err("unknown operator '" + opname + "'");
    }
    std::string args = rhs.substr(open + 1, rhs.size() - open - 2);
    for (auto& tok : text::split(args, ',')) {
      if (tok.empty()) err("empty input operand");
      GateInput in;
      if (tok.size() > 2 && tok.rfind("+k") == tok.size() - 2) {
        in.next_cycle = true;
        tok = std::string(text::trim(std::string_view(tok).substr(0, tok.size() - 2)));
      }
      if (!text::is_identifier(tok)) err("bad wire reference '" + tok + "'");
      in.wire = tok;
      g.inputs.push_back(in);
    }
    nl.gates.push_back(std::move(g));
  });
  if (!have_k) throw ParseError("netlist missing 'k=' header", 0);
  return nl;
}

}  // namespace tempo
