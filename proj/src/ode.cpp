#include "isotrig/ode.hpp"

#include <algorithm>
#include <cmath>

namespace isotrig {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double rms_scaled(const Eigen::VectorXd& v, const Eigen::VectorXd& scale) {
  return std::sqrt((v.array() / scale.array()).square().mean());
}

}  // namespace

Eigen::VectorXd DenseStep::operator()(double t) const {
  const double th = h == 0.0 ? 0.0 : (t - t0) / h;
  const double th1 = 1.0 - th;
  return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

Dopri5::Dopri5(Rhs f, IntegratorConfig cfg) : f_(std::move(f)), cfg_(cfg) {
  if (!(cfg_.rel_tol > 0.0) || !(cfg_.abs_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (!(cfg_.max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
}

double Dopri5::initial_step(const Eigen::VectorXd& z, const Eigen::VectorXd& f0, double span) {
  const Eigen::VectorXd sc = (cfg_.abs_tol + cfg_.rel_tol * z.array().abs()).matrix();
  const double dz = rms_scaled(z, sc), df = rms_scaled(f0, sc);
  double h0 = (dz < 1e-5 || df < 1e-5) ? 1e-6 : 0.01 * dz / df;
  h0 = std::min(h0, span);
  Eigen::VectorXd f1;
  f_(z + h0 * f0, f1);
  const double ddf = rms_scaled(f1 - f0, sc) / h0;
  const double m = std::max(df, ddf);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
  return std::min({100.0 * h0, h1, cfg_.max_step, span});
}

double Dopri5::integrate(double t0, Eigen::VectorXd& z, double t_end,
                         const std::function<bool(const DenseStep&)>& on_step) {
  if (!(t_end >= t0)) throw std::invalid_argument("integrate: t_end before t0");
  if (!z.allFinite()) throw IntegrationError("non-finite initial state");
  double t = t0;
  if (t_end == t0) return t;

  const Eigen::Index n = z.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y1(n), err(n), sc(n);
  f_(z, k1);
  double h = h_last_ > 0.0 ? std::min({h_last_, cfg_.max_step, t_end - t}) : initial_step(z, k1, t_end - t);
  long steps = 0;
  bool rejected = false;

  while (t < t_end) {
    if (++steps > cfg_.max_steps) throw IntegrationError("too many integration steps");
    const double remaining = t_end - t;
    bool last = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      last = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError("step size underflow");

    f_(z + h * (a21 * k1), k2);
    f_(z + h * (a31 * k1 + a32 * k2), k3);
    f_(z + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
    f_(z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
    f_(z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
    y1 = z + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f_(y1, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    sc = (cfg_.abs_tol + cfg_.rel_tol * z.array().abs().max(y1.array().abs())).matrix();
    const double en = rms_scaled(err, sc);
    if (!std::isfinite(en) || !y1.allFinite()) {
      h *= 0.25;
      rejected = true;
      continue;
    }

    if (en <= 1.0) {
      DenseStep step;
      step.t0 = t;
      step.h = h;
      step.r1 = z;
      step.r2 = y1 - z;
      step.r3 = h * k1 - step.r2;
      step.r4 = step.r2 - h * k7 - step.r3;
      step.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      t = last ? t_end : t + h;
      z = y1;
      k1 = k7;
      ++accepted_;
      double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (rejected) fac = std::min(fac, 1.0);
      rejected = false;
      if (!last) h_last_ = h;
      h = std::min(h * fac, cfg_.max_step);
      if (on_step && on_step(step)) return step.t1();
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      rejected = true;
    }
  }
  return t;
}

}  // namespace isotrig
