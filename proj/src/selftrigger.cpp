#include "isotrig/selftrigger.hpp"

#include <cmath>

namespace isotrig {

namespace {

constexpr double kRoundDown = 1.0 - 1e-9;

void require_negative(double beta0) {
  if (!(beta0 < 0.0)) throw std::invalid_argument("beta_0 must be negative");
}

double root_of(const Eigen::VectorXd& b, Rounding r) {
  return min_positive_root({b.data(), static_cast<std::size_t>(b.size())}, r);
}

}  // namespace

Eigen::VectorXd beta(const ComparisonModel& cm, const LieChain& chain, const Eigen::VectorXd& z) {
  if (cm.expAt.size() == 0) throw std::logic_error("comparison model has no t_star");
  if (chain.order() < cm.p - 1) throw std::invalid_argument("Lie chain shorter than the comparison order");
  const Eigen::VectorXd mu = chain.mu(z, cm.p);
  if (mu(0) >= 0.0) throw ImmediateTrigger("triggering condition already reached");
  return cm.expAt.row(0).transpose().cwiseProduct(mu);
}

TriggerBound tau_closed_form_p3(const Eigen::VectorXd& b, [[maybe_unused]] double xi, double t_star) {
  if (b.size() != 3) throw std::invalid_argument("closed form needs p = 3");
  require_negative(b(0));
  TriggerBound out;
  out.method = BoundMethod::ClosedFormP3;
  const double disc = b(1) * b(1) - 4.0 * b(2) * b(0);
  double q = kInf;
  if (disc >= 0.0) {
    const double denom = -b(1) + std::copysign(1.0, b(0)) * std::sqrt(disc);
    if (denom != 0.0) {
      const double cand = 2.0 * b(0) / denom;
      if (cand > 0.0) q = cand;
    }
  }
  out.tau_lower = std::isfinite(q) ? q * kRoundDown * t_star : kInf;
  return out;
}

TriggerBound tau_poly_root(const Eigen::VectorXd& b, [[maybe_unused]] double xi, double t_star) {
  require_negative(b(0));
  TriggerBound out;
  out.method = BoundMethod::PolyRoot;
  const double q = root_of(b, Rounding::Down);
  out.tau_lower = std::isfinite(q) ? q * t_star : kInf;
  return out;
}

TriggerBound tau_iterative(const ComparisonModel& cm_low, const ComparisonModel& cm_high, const LieChain& chain,
                           [[maybe_unused]] double xi, const Eigen::VectorXd& z, int n_iter) {
  if (n_iter < 1) throw std::invalid_argument("n_iter must be at least 1");
  if (cm_low.t_star != cm_high.t_star) throw std::invalid_argument("models must share t_star");
  if (cm_low.p > cm_high.p) throw std::invalid_argument("low-order model must not exceed the high-order one");
  if (chain.order() < cm_high.p - 1) throw std::invalid_argument("Lie chain shorter than the comparison order");

  TriggerBound out;
  out.method = BoundMethod::Iterative;
  Eigen::VectorXd o = chain.mu(z, cm_high.p);
  if (o(0) >= 0.0) throw ImmediateTrigger("triggering condition already reached");

  const double t_star = cm_low.t_star;
  const Eigen::RowVectorXd row = cm_low.expAt.row(0);
  double prod = 1.0, sum = 0.0;
  for (int j = 0; j < n_iter; ++j) {
    const Eigen::VectorXd b = row.transpose().cwiseProduct(o.head(cm_low.p));
    const double q = root_of(b, Rounding::Down);
    if (!std::isfinite(q)) {
      if (j == 0) sum = kInf;
      break;
    }
    prod *= q;
    sum += prod * t_star;
    // Scale by the dilation (powers of q after removing the common degree) and
    // propagate with the high-order model.
    Eigen::VectorXd scaled = o;
    double f = 1.0;
    for (Eigen::Index i = 0; i < scaled.size(); ++i, f *= q) scaled(i) *= f;
    o = cm_high.expAt * scaled;
    out.iterations.push_back({q, o, sum});
    if (!(o(0) < 0.0)) break;
  }
  out.tau_lower = sum;
  return out;
}

double tau_upper(const ComparisonModel& cm_upper, const LieChain& chain, [[maybe_unused]] double xi,
                 const Eigen::VectorXd& z) {
  const Eigen::VectorXd b = beta(cm_upper, chain, z);
  const double q = root_of(b, Rounding::Up);
  return std::isfinite(q) ? q * cm_upper.t_star : kInf;
}

}  // namespace isotrig
