#include "isotrig/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace isotrig {

namespace {

constexpr double kMinW = 1e-12;

std::span<const double> cspan(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> mspan(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void check_w(bool guard, const Eigen::VectorXd& z) {
  if (guard && std::abs(z(z.size() - 1)) <= kMinW)
    throw EvalError("homogenized system evaluated at w = 0");
}

Bindings divide_by_w(std::size_t n) {
  const Expr w = Expr::var("w");
  Bindings b;
  for (const auto& name : state_names(n, false)) b.emplace(name, Expr::var(name) / w);
  return b;
}

Eigen::VectorXd random_point(std::mt19937_64& rng, std::size_t dim, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
  for (auto& v : z) v = normal(rng);
  return z.normalized() * (radius * unif(rng));
}

}  // namespace

std::vector<std::string> state_names(std::size_t n, bool with_w) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) names.push_back("e" + std::to_string(i));
  if (with_w) names.emplace_back("w");
  return names;
}

std::vector<std::string> plant_names(std::size_t n, std::size_t m) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (std::size_t j = 1; j <= m; ++j) names.push_back("u" + std::to_string(j));
  return names;
}

ExtendedField build_extended(const ControlModel& model) {
  if (model.f.size() != model.n) throw std::invalid_argument("f must have n components");
  if (model.k.size() != model.m) throw std::invalid_argument("k must have m components");

  Bindings shift;  // x -> x + e, used to evaluate the controller at the sampled state
  for (std::size_t i = 1; i <= model.n; ++i) {
    const std::string xi = "x" + std::to_string(i);
    shift.emplace(xi, Expr::var(xi) + Expr::var("e" + std::to_string(i)));
  }
  Bindings inputs;
  for (std::size_t j = 0; j < model.m; ++j)
    inputs.emplace("u" + std::to_string(j + 1), substitute(model.k[j], shift));

  ExtendedField out;
  out.n = model.n;
  for (const auto& fi : model.f) out.Z.push_back(substitute(fi, inputs));
  for (std::size_t i = 0; i < model.n; ++i) out.Z.push_back(-out.Z[i]);
  return out;
}

ExtendedField homogenize_field(const ExtendedField& Z, double target_xi) {
  if (!(target_xi > 0.0)) throw std::invalid_argument("homogenization degree must be positive");
  if (Z.homogenized) throw std::invalid_argument("field is already homogenized");
  const Bindings b = divide_by_w(Z.n);
  const Expr scale = pow(Expr::var("w"), target_xi + 1.0);
  ExtendedField out;
  out.n = Z.n;
  for (const auto& zi : Z.Z) out.Z.push_back(scale * substitute(zi, b));
  out.Z.emplace_back();
  out.xi = target_xi;
  out.homogenized = true;
  return out;
}

Expr homogenize_trigger(const Expr& gamma, std::size_t n, double target_theta) {
  return pow(Expr::var("w"), target_theta + 1.0) * substitute(gamma, divide_by_w(n));
}

HomogeneityReport verify_homogeneity(const ExtendedField& Z, double xi, std::size_t samples,
                                     double radius, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("samples must be positive");
  const FieldEvaluator eval(Z);
  std::mt19937_64 rng(seed);
  std::vector<double> scratch;
  HomogeneityReport rep;
  Eigen::VectorXd a(Z.dim()), b(Z.dim());
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::VectorXd z = random_point(rng, Z.dim(), radius);
    if (Z.homogenized) z(z.size() - 1) = std::abs(z(z.size() - 1)) + 0.1 * radius;
    eval(z, a, scratch);
    for (double lambda : {0.5, 2.0}) {
      eval(lambda * z, b, scratch);
      const Eigen::VectorXd expect = std::pow(lambda, xi + 1.0) * a;
      const double denom = std::max(expect.cwiseAbs().maxCoeff(), 1e-300);
      rep.max_residual = std::max(rep.max_residual, (b - expect).cwiseAbs().maxCoeff() / denom);
    }
    ++rep.samples;
  }
  rep.pass = rep.max_residual <= 1e-9;
  return rep;
}

HomogeneityReport verify_homogeneity(const Expr& f, std::span<const std::string> vars, double degree,
                                     std::size_t samples, double radius, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("samples must be positive");
  const Expr outs[] = {f};
  const ExprProgram prog(outs, {vars.begin(), vars.end()});
  std::mt19937_64 rng(seed);
  std::vector<double> scratch;
  HomogeneityReport rep;
  const bool has_w = !vars.empty() && vars.back() == "w";
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::VectorXd z = random_point(rng, vars.size(), radius);
    if (has_w) z(z.size() - 1) = std::abs(z(z.size() - 1)) + 0.1 * radius;
    double a = 0.0;
    prog.eval(cspan(z), {&a, 1}, scratch);
    for (double lambda : {0.5, 2.0}) {
      const Eigen::VectorXd lz = lambda * z;
      double b = 0.0;
      prog.eval(cspan(lz), {&b, 1}, scratch);
      const double expect = std::pow(lambda, degree) * a;
      rep.max_residual =
          std::max(rep.max_residual, std::abs(b - expect) / std::max(std::abs(expect), 1e-300));
    }
    ++rep.samples;
  }
  rep.pass = rep.max_residual <= 1e-9;
  return rep;
}

FieldEvaluator::FieldEvaluator(const ExtendedField& Z)
    : program_(Z.Z, Z.variables()), guard_w_(Z.homogenized) {}

void FieldEvaluator::operator()(const Eigen::VectorXd& z, Eigen::VectorXd& dz,
                                std::vector<double>& scratch) const {
  check_w(guard_w_, z);
  dz.resize(static_cast<Eigen::Index>(program_.num_outputs()));
  program_.eval(cspan(z), mspan(dz), scratch);
}

LieChain::LieChain(const ExtendedField& Z, const Expr& gamma, int p) : guard_w_(Z.homogenized) {
  if (p < 1) throw std::invalid_argument("Lie chain order must be at least 1");
  const auto vars = Z.variables();
  entries_.push_back(gamma);
  for (int k = 0; k < p; ++k) entries_.push_back(lie_derivative(entries_.back(), vars, Z.Z));
  program_ = ExprProgram(entries_, vars);
}

void LieChain::eval(const Eigen::VectorXd& z, std::size_t count, Eigen::VectorXd& out,
                    std::vector<double>& scratch) const {
  check_w(guard_w_, z);
  out.resize(static_cast<Eigen::Index>(count));
  program_.eval_prefix(cspan(z), mspan(out), count, scratch);
}

Eigen::VectorXd LieChain::eval(const Eigen::VectorXd& z, std::size_t count) const {
  thread_local std::vector<double> scratch;
  Eigen::VectorXd out;
  eval(z, count, out, scratch);
  return out;
}

}  // namespace isotrig
