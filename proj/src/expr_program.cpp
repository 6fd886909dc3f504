#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>

#include "isotrig/expr.hpp"

namespace isotrig {

namespace {

using Key = std::tuple<Op, std::int32_t, std::int32_t, std::uint64_t, int>;

}  // namespace

ExprProgram::ExprProgram(std::span<const Expr> outputs, std::vector<std::string> variables)
    : variables_(std::move(variables)) {
  std::map<std::string, std::int32_t, std::less<>> var_index;
  for (std::size_t i = 0; i < variables_.size(); ++i)
    var_index.emplace(variables_[i], static_cast<std::int32_t>(i));

  std::map<Key, std::int32_t> by_key;
  std::unordered_map<const void*, std::int32_t> by_node;

  auto emit = [&](const Instr& in) {
    const Key key{in.op, in.a, in.b, std::bit_cast<std::uint64_t>(in.payload), in.ipow};
    auto [it, fresh] = by_key.emplace(key, static_cast<std::int32_t>(code_.size()));
    if (fresh) code_.push_back(in);
    return it->second;
  };

  // Iterative post-order so deep chains do not exhaust the stack.
  auto compile = [&](const Expr& root) {
    std::vector<std::pair<Expr, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [e, expanded] = stack.back();
      stack.pop_back();
      if (by_node.contains(e.id())) continue;
      if (!expanded) {
        stack.emplace_back(e, true);
        for (std::size_t i = e.arity(); i-- > 0;) stack.emplace_back(e.child(i), false);
        continue;
      }
      Instr in{e.op()};
      switch (e.op()) {
        case Op::Const:
          in.payload = e.value();
          break;
        case Op::Var: {
          auto it = var_index.find(e.name());
          if (it == var_index.end()) throw EvalError("variable '" + e.name() + "' is not bound");
          in.a = it->second;
          break;
        }
        case Op::PowInt:
          in.ipow = e.int_exponent();
          break;
        case Op::PowReal:
          in.payload = e.real_exponent();
          break;
        default:
          break;
      }
      if (e.arity() >= 1) in.a = by_node.at(e.child(0).id());
      if (e.arity() >= 2) in.b = by_node.at(e.child(1).id());
      by_node.emplace(e.id(), emit(in));
    }
    return by_node.at(root.id());
  };

  std::int32_t high = -1;
  for (const auto& out : outputs) {
    outputs_.push_back(compile(out));
    high = std::max(high, static_cast<std::int32_t>(code_.size()) - 1);
    prefix_end_.push_back(high);
  }
}

void ExprProgram::eval(std::span<const double> vars, std::span<double> out,
                       std::vector<double>& scratch) const {
  eval_prefix(vars, out, outputs_.size(), scratch);
}

void ExprProgram::eval_prefix(std::span<const double> vars, std::span<double> out, std::size_t count,
                              std::vector<double>& scratch) const {
  if (vars.size() != variables_.size()) throw EvalError("wrong number of variables");
  if (count > outputs_.size() || out.size() < count) throw EvalError("output span too small");
  if (count == 0) return;
  const std::size_t end = static_cast<std::size_t>(prefix_end_[count - 1]) + 1;
  scratch.resize(code_.size());
  double* r = scratch.data();
  for (std::size_t i = 0; i < end; ++i) {
    const Instr& in = code_[i];
    switch (in.op) {
      case Op::Const: r[i] = in.payload; break;
      case Op::Var: r[i] = vars[static_cast<std::size_t>(in.a)]; break;
      case Op::Add: r[i] = r[in.a] + r[in.b]; break;
      case Op::Mul: r[i] = r[in.a] * r[in.b]; break;
      case Op::Div:
        if (r[in.b] == 0.0) throw EvalError("division by zero");
        r[i] = r[in.a] / r[in.b];
        break;
      case Op::Neg: r[i] = -r[in.a]; break;
      case Op::PowInt: {
        double result = 1.0, b = r[in.a];
        for (unsigned e = static_cast<unsigned>(in.ipow); e; e >>= 1u) {
          if (e & 1u) result *= b;
          b *= b;
        }
        r[i] = result;
        break;
      }
      case Op::PowReal: {
        const double b = r[in.a];
        if (b == 0.0 && in.payload < 0.0) throw EvalError("zero raised to a negative power");
        if (b < 0.0 && in.payload != std::floor(in.payload))
          throw EvalError("negative base raised to a fractional power");
        r[i] = std::pow(b, in.payload);
        break;
      }
      case Op::Sin: r[i] = std::sin(r[in.a]); break;
      case Op::Cos: r[i] = std::cos(r[in.a]); break;
      case Op::Exp: r[i] = std::exp(r[in.a]); break;
    }
  }
  for (std::size_t k = 0; k < count; ++k) out[k] = r[outputs_[k]];
}

}  // namespace isotrig
