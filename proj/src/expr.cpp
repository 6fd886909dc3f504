#include "isotrig/expr.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

namespace isotrig {

namespace detail {

struct Node {
  Op op;
  double payload = 0.0;  // constant value or real exponent
  int ipow = 0;
  std::string name;
  std::vector<Expr> children;
};

}  // namespace detail

using detail::Node;

namespace {

const std::shared_ptr<const Node>& zero_node() {
  static const auto n = std::make_shared<const Node>(Node{Op::Const, 0.0, 0, {}, {}});
  return n;
}

double apply_pow_real(double base, double exponent) {
  if (base == 0.0 && exponent < 0.0) throw EvalError("zero raised to a negative power");
  if (base < 0.0 && exponent != std::floor(exponent))
    throw EvalError("negative base raised to a fractional power");
  return std::pow(base, exponent);
}

double int_power(double base, int k) {
  double result = 1.0;
  double b = base;
  unsigned e = static_cast<unsigned>(k);
  while (e) {
    if (e & 1u) result *= b;
    b *= b;
    e >>= 1u;
  }
  return result;
}

}  // namespace

Expr::Expr() : node_(zero_node()) {}

Expr::Expr(double value)
    : node_(value == 0.0 && !std::signbit(value)
                ? zero_node()
                : std::make_shared<const Node>(Node{Op::Const, value, 0, {}, {}})) {}

Expr Expr::constant(double value) { return Expr(value); }

Expr Expr::var(std::string name) {
  return Expr(std::make_shared<const Node>(Node{Op::Var, 0.0, 0, std::move(name), {}}));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->payload; }
const std::string& Expr::name() const { return node_->name; }
int Expr::int_exponent() const { return node_->ipow; }
double Expr::real_exponent() const { return node_->payload; }
std::size_t Expr::arity() const { return node_->children.size(); }
Expr Expr::child(std::size_t i) const { return node_->children.at(i); }

Expr Expr::make(Op op, std::vector<Expr> children, double payload, int ipow) {
  return Expr(std::make_shared<const Node>(Node{op, payload, ipow, {}, std::move(children)}));
}

// Builders fold constants and apply the annihilator/identity rules only.

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() + b.value());
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return Expr::make(Op::Add, {a, b});
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.value());
  if (a.op() == Op::Neg) return a.child(0);
  return Expr::make(Op::Neg, {a});
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() - b.value());
  return a + (-b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.value() * b.value());
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expr::make(Op::Mul, {a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_zero()) throw EvalError("division by constant zero");
  if (a.is_constant() && b.is_constant()) return Expr(a.value() / b.value());
  if (a.is_zero()) return Expr();
  if (b.is_constant(1.0)) return a;
  return Expr::make(Op::Div, {a, b});
}

Expr pow(const Expr& base, int exponent) {
  if (exponent < 0) return pow(base, static_cast<double>(exponent));
  if (exponent == 0) return Expr(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) return Expr(int_power(base.value(), exponent));
  return Expr::make(Op::PowInt, {base}, 0.0, exponent);
}

Expr pow(const Expr& base, double exponent) {
  if (exponent >= 0.0 && exponent == std::floor(exponent) && exponent < 2147483647.0)
    return pow(base, static_cast<int>(exponent));
  if (base.is_constant()) return Expr(apply_pow_real(base.value(), exponent));
  return Expr::make(Op::PowReal, {base}, exponent);
}

Expr sin(const Expr& a) {
  if (a.is_constant()) return Expr(std::sin(a.value()));
  return Expr::make(Op::Sin, {a});
}

Expr cos(const Expr& a) {
  if (a.is_constant()) return Expr(std::cos(a.value()));
  return Expr::make(Op::Cos, {a});
}

Expr exp(const Expr& a) {
  if (a.is_constant()) return Expr(std::exp(a.value()));
  return Expr::make(Op::Exp, {a});
}

namespace {

// Post-order rewrite with per-call memoisation keyed on node identity, so
// shared subtrees are visited once.
class Rewriter {
 public:
  using Leaf = std::function<Expr(const Expr&)>;
  explicit Rewriter(Leaf leaf) : leaf_(std::move(leaf)) {}

  Expr operator()(const Expr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr out;
    switch (e.op()) {
      case Op::Const:
      case Op::Var: out = leaf_(e); break;
      case Op::Add: out = (*this)(e.child(0)) + (*this)(e.child(1)); break;
      case Op::Mul: out = (*this)(e.child(0)) * (*this)(e.child(1)); break;
      case Op::Div: out = (*this)(e.child(0)) / (*this)(e.child(1)); break;
      case Op::Neg: out = -(*this)(e.child(0)); break;
      case Op::PowInt: out = pow((*this)(e.child(0)), e.int_exponent()); break;
      case Op::PowReal: out = pow((*this)(e.child(0)), e.real_exponent()); break;
      case Op::Sin: out = sin((*this)(e.child(0))); break;
      case Op::Cos: out = cos((*this)(e.child(0))); break;
      case Op::Exp: out = exp((*this)(e.child(0))); break;
    }
    memo_.emplace(e.id(), out);
    return out;
  }

 private:
  Leaf leaf_;
  std::unordered_map<const void*, Expr> memo_;
};

// Forward-mode derivative: seed(var) gives the derivative of each variable.
class Deriver {
 public:
  using Seed = std::function<Expr(const std::string&)>;
  explicit Deriver(Seed seed) : seed_(std::move(seed)) {}

  Expr operator()(const Expr& e) {
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr d;
    switch (e.op()) {
      case Op::Const: d = Expr(); break;
      case Op::Var: d = seed_(e.name()); break;
      case Op::Add: d = (*this)(e.child(0)) + (*this)(e.child(1)); break;
      case Op::Neg: d = -(*this)(e.child(0)); break;
      case Op::Mul: {
        const Expr a = e.child(0), b = e.child(1);
        d = (*this)(a) * b + a * (*this)(b);
        break;
      }
      case Op::Div: {
        const Expr a = e.child(0), b = e.child(1);
        const Expr da = (*this)(a), db = (*this)(b);
        d = da / b - (a * db) / pow(b, 2);
        break;
      }
      case Op::PowInt: {
        const Expr a = e.child(0);
        const int k = e.int_exponent();
        d = Expr(static_cast<double>(k)) * pow(a, k - 1) * (*this)(a);
        break;
      }
      case Op::PowReal: {
        const Expr a = e.child(0);
        const double r = e.real_exponent();
        d = Expr(r) * pow(a, r - 1.0) * (*this)(a);
        break;
      }
      case Op::Sin: d = cos(e.child(0)) * (*this)(e.child(0)); break;
      case Op::Cos: d = -(sin(e.child(0)) * (*this)(e.child(0))); break;
      case Op::Exp: d = e * (*this)(e.child(0)); break;
    }
    memo_.emplace(e.id(), d);
    return d;
  }

 private:
  Seed seed_;
  std::unordered_map<const void*, Expr> memo_;
};

}  // namespace

Expr differentiate(const Expr& f, std::string_view var) {
  Deriver d([var](const std::string& name) { return Expr(name == var ? 1.0 : 0.0); });
  return d(f);
}

Expr lie_derivative(const Expr& f, std::span<const std::string> vars, std::span<const Expr> field) {
  if (vars.size() != field.size())
    throw std::invalid_argument("lie_derivative: variable/field size mismatch");
  std::unordered_map<std::string, Expr> seeds;
  for (std::size_t i = 0; i < vars.size(); ++i) seeds.emplace(vars[i], field[i]);
  Deriver d([&seeds](const std::string& name) {
    auto it = seeds.find(name);
    return it == seeds.end() ? Expr() : it->second;
  });
  return d(f);
}

Expr substitute(const Expr& f, const Bindings& bindings) {
  if (bindings.empty()) return f;
  Rewriter r([&bindings](const Expr& leaf) {
    if (leaf.op() == Op::Var) {
      if (auto it = bindings.find(leaf.name()); it != bindings.end()) return it->second;
    }
    return leaf;
  });
  return r(f);
}

double evaluate(const Expr& f, const VarAssignment& at) {
  std::unordered_map<const void*, double> memo;
  std::function<double(const Expr&)> rec = [&](const Expr& e) -> double {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    double v = 0.0;
    switch (e.op()) {
      case Op::Const: v = e.value(); break;
      case Op::Var: {
        auto it = at.find(e.name());
        if (it == at.end()) throw EvalError("missing variable '" + e.name() + "'");
        v = it->second;
        break;
      }
      case Op::Add: v = rec(e.child(0)) + rec(e.child(1)); break;
      case Op::Mul: v = rec(e.child(0)) * rec(e.child(1)); break;
      case Op::Div: {
        const double num = rec(e.child(0));
        const double den = rec(e.child(1));
        if (den == 0.0) throw EvalError("division by zero");
        v = num / den;
        break;
      }
      case Op::Neg: v = -rec(e.child(0)); break;
      case Op::PowInt: v = int_power(rec(e.child(0)), e.int_exponent()); break;
      case Op::PowReal: v = apply_pow_real(rec(e.child(0)), e.real_exponent()); break;
      case Op::Sin: v = std::sin(rec(e.child(0))); break;
      case Op::Cos: v = std::cos(rec(e.child(0))); break;
      case Op::Exp: v = std::exp(rec(e.child(0))); break;
    }
    memo.emplace(e.id(), v);
    return v;
  };
  return rec(f);
}

std::vector<std::string> free_variables(const Expr& f) {
  std::set<std::string> names;
  std::set<const void*> seen;
  std::vector<Expr> stack{f};
  while (!stack.empty()) {
    Expr e = stack.back();
    stack.pop_back();
    if (!seen.insert(e.id()).second) continue;
    if (e.op() == Op::Var) names.insert(e.name());
    for (std::size_t i = 0; i < e.arity(); ++i) stack.push_back(e.child(i));
  }
  return {names.begin(), names.end()};
}

std::size_t node_count(const Expr& e) {
  std::set<const void*> seen;
  std::vector<Expr> stack{e};
  while (!stack.empty()) {
    Expr n = stack.back();
    stack.pop_back();
    if (!seen.insert(n.id()).second) continue;
    for (std::size_t i = 0; i < n.arity(); ++i) stack.push_back(n.child(i));
  }
  return seen.size();
}

// ---------------------------------------------------------------------------
// Printing

namespace {

enum Prec { kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kAtom = 5 };

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Const: return e.value() < 0.0 || std::signbit(e.value()) ? kUnary : kAtom;
    case Op::Var:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp: return kAtom;
    case Op::Add: return kSum;
    case Op::Mul:
    case Op::Div: return kProduct;
    case Op::Neg: return kUnary;
    case Op::PowInt:
    case Op::PowReal: return kPower;
  }
  return kAtom;
}

void print(const Expr& e, std::ostringstream& os);

void print_wrapped(const Expr& e, int min_prec, std::ostringstream& os) {
  if (precedence(e) < min_prec) {
    os << '(';
    print(e, os);
    os << ')';
  } else {
    print(e, os);
  }
}

void print(const Expr& e, std::ostringstream& os) {
  switch (e.op()) {
    case Op::Const: {
      const double v = e.value();
      if (std::signbit(v)) os << '-' << format_number(-v);
      else os << format_number(v);
      break;
    }
    case Op::Var: os << e.name(); break;
    case Op::Add: {
      print_wrapped(e.child(0), kSum, os);
      const Expr rhs = e.child(1);
      if (rhs.op() == Op::Neg) {
        os << " - ";
        print_wrapped(rhs.child(0), kProduct, os);
      } else {
        os << " + ";
        // a + (-c) must keep the sign attached to the literal
        print_wrapped(rhs, rhs.is_constant() ? kAtom : kProduct, os);
      }
      break;
    }
    case Op::Mul:
      print_wrapped(e.child(0), kProduct, os);
      os << '*';
      print_wrapped(e.child(1), kUnary + 1, os);
      break;
    case Op::Div:
      print_wrapped(e.child(0), kProduct, os);
      os << '/';
      print_wrapped(e.child(1), kUnary + 1, os);
      break;
    case Op::Neg:
      os << '-';
      print_wrapped(e.child(0), kPower, os);
      break;
    case Op::PowInt:
      print_wrapped(e.child(0), kAtom, os);
      os << '^' << e.int_exponent();
      break;
    case Op::PowReal: {
      print_wrapped(e.child(0), kAtom, os);
      const double r = e.real_exponent();
      os << '^';
      if (std::signbit(r)) os << "(-" << format_number(-r) << ')';
      else os << format_number(r);
      break;
    }
    case Op::Sin: os << "sin("; print(e.child(0), os); os << ')'; break;
    case Op::Cos: os << "cos("; print(e.child(0), os); os << ')'; break;
    case Op::Exp: os << "exp("; print(e.child(0), os); os << ')'; break;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(e, os);
  return os.str();
}

}  // namespace isotrig
