#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isotrig {

/// Raised by parse() with the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Division by zero, 0 to a negative power, negative base to a fractional power,
/// or a variable missing from the assignment.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t { Const, Var, Add, Mul, Div, Neg, PowInt, PowReal, Sin, Cos, Exp };

class Expr;

namespace detail {
struct Node;
}

/// Immutable scalar expression. Copies share structure; subtrees may be shared
/// between expressions (the tree is in general a DAG).
class Expr {
 public:
  Expr();  // constant zero
  Expr(double value);  // NOLINT: implicit constant lift keeps builder code short

  static Expr constant(double value);
  static Expr var(std::string name);

  Op op() const;
  double value() const;               // Const only
  const std::string& name() const;    // Var only
  int int_exponent() const;           // PowInt only
  double real_exponent() const;       // PowReal only
  std::size_t arity() const;
  Expr child(std::size_t i) const;

  bool is_constant() const { return op() == Op::Const; }
  bool is_constant(double v) const { return is_constant() && value() == v; }
  bool is_zero() const { return is_constant(0.0); }

  /// Node identity (shared subtrees compare equal).
  const void* id() const { return node_.get(); }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

  friend Expr pow(const Expr& base, int exponent);
  friend Expr pow(const Expr& base, double exponent);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);

 private:
  explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  static Expr make(Op op, std::vector<Expr> children, double payload = 0.0, int ipow = 0);

  std::shared_ptr<const detail::Node> node_;
  friend struct detail::Node;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr pow(const Expr& base, double exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);

using VarAssignment = std::map<std::string, double, std::less<>>;
using Bindings = std::map<std::string, Expr, std::less<>>;
using ParamMap = std::map<std::string, double, std::less<>>;

/// Grammar: ^ (right-assoc) > unary minus > * / > + -, parentheses, sin/cos/exp
/// calls, identifiers [a-zA-Z][a-zA-Z0-9_]*, decimal literals with exponent.
/// Parameters are folded to constants. Exponents must be constant.
Expr parse(std::string_view text, std::span<const std::string> allowed_vars,
           const ParamMap& params = {});

/// Printed form uses the parse grammar; literals keep 17 significant digits so
/// parse(to_string(e)) evaluates bit-identically.
std::string to_string(const Expr& e);

Expr differentiate(const Expr& f, std::string_view var);

/// Simultaneous substitution of variables by expressions.
Expr substitute(const Expr& f, const Bindings& bindings);

double evaluate(const Expr& f, const VarAssignment& at);

/// Sorted list of free variable names.
std::vector<std::string> free_variables(const Expr& f);

/// Directional derivative sum_i d f/d vars[i] * field[i], built in one pass.
Expr lie_derivative(const Expr& f, std::span<const std::string> vars, std::span<const Expr> field);

/// Number of distinct nodes reachable from e.
std::size_t node_count(const Expr& e);

/// Flat evaluator for a batch of expressions over a fixed variable ordering.
/// Structurally identical subexpressions are computed once. The program is
/// immutable; evaluation needs a caller-owned scratch buffer so one program can
/// be shared across threads.
class ExprProgram {
 public:
  ExprProgram() = default;
  ExprProgram(std::span<const Expr> outputs, std::vector<std::string> variables);

  std::size_t num_outputs() const { return outputs_.size(); }
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_instructions() const { return code_.size(); }
  const std::vector<std::string>& variables() const { return variables_; }

  /// Evaluate every output. Throws EvalError on a domain violation.
  void eval(std::span<const double> vars, std::span<double> out, std::vector<double>& scratch) const;

  /// Evaluate only the first `count` outputs (uses the same scratch protocol).
  void eval_prefix(std::span<const double> vars, std::span<double> out, std::size_t count,
                   std::vector<double>& scratch) const;

 private:
  struct Instr {
    Op op;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double payload = 0.0;
    int ipow = 0;
  };
  std::vector<Instr> code_;
  std::vector<std::int32_t> outputs_;
  // Highest instruction index needed for the first k outputs.
  std::vector<std::int32_t> prefix_end_;
  std::vector<std::string> variables_;
};

}  // namespace isotrig
