#include "isotrig/sim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace isotrig {

namespace {

constexpr double kInfTime = std::numeric_limits<double>::infinity();
constexpr int kScanPoints = 8;

struct Crossing {
  bool found = false;
  double t = 0.0;
};

// First sign change of gamma from negative to nonnegative inside a step,
// scanned on the dense output and refined by bisection.
Crossing find_crossing(const TriggeredSystem& sys, const DenseStep& step, double tol) {
  double ta = step.t0;
  for (int k = 1; k <= kScanPoints; ++k) {
    const double tb = k == kScanPoints ? step.t1() : step.t0 + step.h * k / kScanPoints;
    if (sys.gamma(step(tb)) >= 0.0) {
      double lo = ta, hi = tb;
      for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sys.gamma(step(mid)) >= 0.0) hi = mid;
        else lo = mid;
      }
      return {true, 0.5 * (lo + hi)};
    }
    ta = tb;
  }
  return {};
}

}  // namespace

TriggeredSystem::TriggeredSystem(const ExtendedField& Z, const Expr& gamma)
    : field_(Z), gamma_(Z, gamma, 1), n_(Z.n), homogenized_(Z.homogenized) {}

void TriggeredSystem::field(const Eigen::VectorXd& z, Eigen::VectorXd& dz) const {
  thread_local std::vector<double> scratch;
  field_(z, dz, scratch);
}

double TriggeredSystem::gamma(const Eigen::VectorXd& z) const {
  thread_local std::vector<double> scratch;
  thread_local Eigen::VectorXd out;
  gamma_.eval(z, 1, out, scratch);
  return out(0);
}

Eigen::VectorXd Trajectory::operator()(double t) const {
  if (steps.empty() || t <= steps.front().t0) return z0;
  for (const auto& s : steps)
    if (t <= s.t1()) return s(t);
  return steps.back()(steps.back().t1());
}

Trajectory flow(const TriggeredSystem& sys, const Eigen::VectorXd& z0, double T, const IntegratorConfig& cfg) {
  if (!(T > 0.0)) throw std::invalid_argument("flow: T must be positive");
  Trajectory tr;
  tr.z0 = z0;
  Dopri5 ode([&sys](const Eigen::VectorXd& z, Eigen::VectorXd& dz) { sys.field(z, dz); }, cfg);
  Eigen::VectorXd z = z0;
  ode.integrate(0.0, z, T, [&tr](const DenseStep& s) {
    tr.steps.push_back(s);
    return false;
  });
  return tr;
}

double event_time_oracle(const TriggeredSystem& sys, const Eigen::VectorXd& z0, const IntegratorConfig& cfg) {
  if (!(sys.gamma(z0) < 0.0)) throw std::invalid_argument("event oracle needs gamma(z0) < 0");
  Dopri5 ode([&sys](const Eigen::VectorXd& z, Eigen::VectorXd& dz) { sys.field(z, dz); }, cfg);
  Eigen::VectorXd z = z0;
  Crossing hit;
  ode.integrate(0.0, z, cfg.horizon, [&](const DenseStep& s) {
    hit = find_crossing(sys, s, cfg.event_tol);
    return hit.found;
  });
  return hit.found ? hit.t : kInfTime;
}

std::string strategy_name(const Strategy& s) {
  switch (s.index()) {
    case 0: return "periodic";
    case 1: return "event";
    case 2: return "selftrig";
    default: return "selftrig_prev_work";
  }
}

std::vector<double> SimTrace::inter_exec() const {
  std::vector<double> d;
  for (std::size_t i = 1; i < exec_instants.size(); ++i) d.push_back(exec_instants[i] - exec_instants[i - 1]);
  return d;
}

void SimTrace::write_csv(std::ostream& os) const {
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",e" << i;
  os << ",gamma,exec_flag\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (std::size_t r = 0; r < times.size(); ++r) {
    os << num(times[r]);
    for (Eigen::Index i = 0; i < states[r].size(); ++i) os << ',' << num(states[r](i));
    os << ',' << num(gamma[r]) << ',' << (exec_flag[r] ? 1 : 0) << '\n';
  }
}

SimTrace run_closed_loop(const TriggeredSystem& sys, const Strategy& strategy, const Eigen::VectorXd& x0,
                         double T_end, const IntegratorConfig& cfg, int samples_per_step) {
  if (sys.homogenized()) throw std::invalid_argument("closed-loop simulation runs on the original system");
  if (!(T_end > 0.0)) throw std::invalid_argument("T_end must be positive");
  const auto n = static_cast<Eigen::Index>(sys.n());
  if (x0.size() != n) throw std::invalid_argument("initial state has the wrong dimension");

  SimTrace tr;
  tr.strategy = strategy_name(strategy);
  tr.n = sys.n();
  auto record = [&](double t, const Eigen::VectorXd& z, bool exec) {
    tr.times.push_back(t);
    tr.states.push_back(z);
    tr.gamma.push_back(sys.gamma(z));
    tr.exec_flag.push_back(exec);
  };

  Dopri5 ode([&sys](const Eigen::VectorXd& z, Eigen::VectorXd& dz) { sys.field(z, dz); }, cfg);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * n);
  z.head(n) = x0;
  double t = 0.0;
  const bool is_event = std::holds_alternative<EventStrategy>(strategy);
  const long max_exec = 10000000;

  while (t < T_end) {
    if (static_cast<long>(tr.exec_instants.size()) >= max_exec) throw IntegrationError("too many executions");
    z.tail(n).setZero();
    tr.exec_instants.push_back(t);
    record(t, z, true);
    const Eigen::VectorXd x = z.head(n);

    double tau = kInfTime;
    if (const auto* p = std::get_if<PeriodicStrategy>(&strategy)) {
      tau = p->period;
    } else if (const auto* s = std::get_if<SelfTriggerStrategy>(&strategy)) {
      tau = s->bound(x);
    } else if (const auto* w = std::get_if<PriorWorkStrategy>(&strategy)) {
      const double lambda = x.norm() / w->r;
      tau = lambda > 0.0 ? std::pow(lambda, -w->xi) * w->tau_star : kInfTime;
    }
    if (!(tau > 0.0)) throw IntegrationError("strategy returned a non-positive inter-execution time at t = " + std::to_string(t));

    const double stop = std::min(T_end, t + std::min(tau, cfg.horizon));
    Crossing hit;
    DenseStep hit_step;
    ode.integrate(t, z, stop, [&](const DenseStep& s) {
      const double t_last = is_event && (hit = find_crossing(sys, s, cfg.event_tol)).found ? hit.t : s.t1();
      for (int k = 1; k <= samples_per_step; ++k) {
        const double tk = s.t0 + (t_last - s.t0) * k / (samples_per_step + 1);
        record(tk, s(tk), false);
      }
      if (hit.found) {
        hit_step = s;
        return true;
      }
      if (s.t1() < stop) record(s.t1(), s(s.t1()), false);
      return false;
    });
    if (hit.found) {
      t = hit.t;
      z = hit_step(t);
    } else {
      t = stop;
    }
    record(t, z, false);
  }
  return tr;
}

}  // namespace isotrig
