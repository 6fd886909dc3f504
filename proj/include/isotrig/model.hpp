#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isotrig/expr.hpp"

namespace isotrig {

/// Names x1..xn, e1..en and optionally w, in the order used for all state vectors.
std::vector<std::string> state_names(std::size_t n, bool with_w);
std::vector<std::string> plant_names(std::size_t n, std::size_t m);  // x1..xn, u1..um

/// Plant xdot = f(x, u), controller u = k(x) and triggering condition gamma(x, e).
struct ControlModel {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<Expr> f;
  std::vector<Expr> k;
  Expr gamma;
  double radius = 1.0;
};

/// Closed loop in z = (x, e) or, once homogenized, z = (x, e, w).
struct ExtendedField {
  std::size_t n = 0;
  std::vector<Expr> Z;
  std::optional<double> xi;
  bool homogenized = false;

  std::size_t dim() const { return Z.size(); }
  std::vector<std::string> variables() const { return state_names(n, homogenized); }
};

ExtendedField build_extended(const ControlModel& model);

/// w^(xi+1) Z(z / w) with wdot = 0.
ExtendedField homogenize_field(const ExtendedField& Z, double target_xi);

/// w^(theta+1) gamma(z / w). The result is homogeneous of degree theta + 1 in (z, w).
Expr homogenize_trigger(const Expr& gamma, std::size_t n, double target_theta);

struct HomogeneityReport {
  bool pass = false;
  double max_residual = 0.0;  // relative
  std::size_t samples = 0;
};

/// Checks Z(lambda z) = lambda^(xi+1) Z(z) for lambda in {0.5, 2} at random z in the
/// ball of the given radius.
HomogeneityReport verify_homogeneity(const ExtendedField& Z, double xi, std::size_t samples,
                                     double radius = 1.0, std::uint64_t seed = 1);

/// Same check for a scalar function of degree `degree`.
HomogeneityReport verify_homogeneity(const Expr& f, std::span<const std::string> vars,
                                     double degree, std::size_t samples, double radius = 1.0,
                                     std::uint64_t seed = 1);

/// Evaluates the extended field as a flat program.
class FieldEvaluator {
 public:
  FieldEvaluator() = default;
  explicit FieldEvaluator(const ExtendedField& Z);

  std::size_t dim() const { return program_.num_outputs(); }
  void operator()(const Eigen::VectorXd& z, Eigen::VectorXd& dz, std::vector<double>& scratch) const;

 private:
  ExprProgram program_;
  bool guard_w_ = false;
};

/// gamma and its first p Lie derivatives along Z.
class LieChain {
 public:
  LieChain() = default;
  LieChain(const ExtendedField& Z, const Expr& gamma, int p);

  int order() const { return static_cast<int>(entries_.size()) - 1; }
  std::size_t dim() const { return program_.num_variables(); }
  const std::vector<Expr>& entries() const { return entries_; }
  bool homogenized() const { return guard_w_; }

  /// First `count` entries at z (count <= order()+1).
  void eval(const Eigen::VectorXd& z, std::size_t count, Eigen::VectorXd& out,
            std::vector<double>& scratch) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& z, std::size_t count) const;

  /// mu^p(z): entries 0..p-1.
  Eigen::VectorXd mu(const Eigen::VectorXd& z, int p) const { return eval(z, static_cast<std::size_t>(p)); }
  double gamma(const Eigen::VectorXd& z) const { return eval(z, 1)(0); }

 private:
  std::vector<Expr> entries_;
  ExprProgram program_;
  bool guard_w_ = false;
};

}  // namespace isotrig
