#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "isotrig/comparison.hpp"
#include "isotrig/model.hpp"
#include "isotrig/polyroot.hpp"

namespace isotrig {

/// gamma(z) >= 0 at the sampling instant: the caller should execute immediately.
class ImmediateTrigger : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundMethod { ClosedFormP3, PolyRoot, Iterative };

struct IterationRecord {
  double q = 0.0;            // lambda_j^xi
  Eigen::VectorXd o;         // high-order bound state after the step
  double partial_sum = 0.0;  // bound after this step (seconds)
};

struct TriggerBound {
  double tau_lower = 0.0;  // seconds, +inf if the trigger is never reached
  std::optional<double> tau_upper;
  std::vector<IterationRecord> iterations;
  BoundMethod method = BoundMethod::PolyRoot;
};

/// beta_i = exp(A t*)_(1, i+1) L^i gamma(z), i < p.
Eigen::VectorXd beta(const ComparisonModel& cm, const LieChain& chain, const Eigen::VectorXd& z);

/// Quadratic formula in the cancellation-free form; requires p = 3 and beta_0 < 0.
TriggerBound tau_closed_form_p3(const Eigen::VectorXd& beta, double xi, double t_star);

/// Smallest positive root of sum beta_i q^i, rounded down; tau = q t*.
TriggerBound tau_poly_root(const Eigen::VectorXd& beta, double xi, double t_star);

/// Anytime refinement with a low-order model for the root and a high-order model
/// for propagating the bound state. `chain` must have order >= cm_high.p.
TriggerBound tau_iterative(const ComparisonModel& cm_low, const ComparisonModel& cm_high,
                           const LieChain& chain, double xi, const Eigen::VectorXd& z, int n_iter);

/// Upper bound from a model of the reversed inequality, root rounded up.
double tau_upper(const ComparisonModel& cm_upper, const LieChain& chain, double xi, const Eigen::VectorXd& z);

}  // namespace isotrig
