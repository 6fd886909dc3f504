#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "isotrig/model.hpp"
#include "isotrig/ode.hpp"

namespace isotrig {

/// Field and triggering condition evaluated on the same state layout.
class TriggeredSystem {
 public:
  TriggeredSystem(const ExtendedField& Z, const Expr& gamma);

  std::size_t dim() const { return field_.dim(); }
  std::size_t n() const { return n_; }
  bool homogenized() const { return homogenized_; }
  void field(const Eigen::VectorXd& z, Eigen::VectorXd& dz) const;
  double gamma(const Eigen::VectorXd& z) const;

 private:
  FieldEvaluator field_;
  LieChain gamma_;
  std::size_t n_ = 0;
  bool homogenized_ = false;
};

struct Trajectory {
  std::vector<DenseStep> steps;
  Eigen::VectorXd z0;

  double t_end() const { return steps.empty() ? 0.0 : steps.back().t1(); }
  Eigen::VectorXd operator()(double t) const;
};

Trajectory flow(const TriggeredSystem& sys, const Eigen::VectorXd& z0, double T, const IntegratorConfig& cfg);

/// First t in (0, horizon] with gamma(z(t, z0)) = 0, +inf if none.
double event_time_oracle(const TriggeredSystem& sys, const Eigen::VectorXd& z0, const IntegratorConfig& cfg);

struct PeriodicStrategy {
  double period = 0.0;
};
struct EventStrategy {};
/// Bound evaluated from the sampled plant state x(t_i).
struct SelfTriggerStrategy {
  std::function<double(const Eigen::VectorXd& x)> bound;
};
/// tau = (|x(t_i)| / r)^(-xi) * tau_star.
struct PriorWorkStrategy {
  double tau_star = 0.0;
  double r = 1.0;
  double xi = 1.0;
};
using Strategy = std::variant<PeriodicStrategy, EventStrategy, SelfTriggerStrategy, PriorWorkStrategy>;

std::string strategy_name(const Strategy& s);

struct SimTrace {
  std::string strategy;
  std::size_t n = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;  // (x, e)
  std::vector<double> gamma;
  std::vector<bool> exec_flag;
  std::vector<double> exec_instants;

  std::vector<double> inter_exec() const;
  void write_csv(std::ostream& os) const;
};

/// Sample-and-hold simulation of the un-homogenized closed loop. `samples_per_step`
/// adds dense-output points between integrator steps to the record.
SimTrace run_closed_loop(const TriggeredSystem& sys, const Strategy& strategy, const Eigen::VectorXd& x0,
                         double T_end, const IntegratorConfig& cfg, int samples_per_step = 0);

}  // namespace isotrig
