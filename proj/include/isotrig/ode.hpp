#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <stdexcept>

namespace isotrig {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegratorConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-14;
  double max_step = std::numeric_limits<double>::infinity();
  double event_tol = 1e-13;  // bisection width on event times (s)
  double horizon = 10.0;     // event searches stop here (s)
  long max_steps = 20000000;
};

/// One accepted step with its fifth-order continuous extension.
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Eigen::VectorXd r1, r2, r3, r4, r5;

  double t1() const { return t0 + h; }
  Eigen::VectorXd operator()(double t) const;
};

/// Autonomous right-hand side.
using Rhs = std::function<void(const Eigen::VectorXd& z, Eigen::VectorXd& dz)>;

/// Dormand-Prince 5(4) with FSAL and dense output.
class Dopri5 {
 public:
  Dopri5(Rhs f, IntegratorConfig cfg);

  /// Advances z from t0 to t_end. After every accepted step `on_step` is called;
  /// if it returns true integration stops there. Returns the time reached.
  double integrate(double t0, Eigen::VectorXd& z, double t_end,
                   const std::function<bool(const DenseStep&)>& on_step = {});

  long steps() const { return accepted_; }
  const IntegratorConfig& config() const { return cfg_; }

 private:
  double initial_step(const Eigen::VectorXd& z, const Eigen::VectorXd& f0, double span);

  Rhs f_;
  IntegratorConfig cfg_;
  long accepted_ = 0;
  double h_last_ = 0.0;
};

}  // namespace isotrig
