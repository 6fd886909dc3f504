#include "isotrig/manifold.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "isotrig/polyroot.hpp"
#include "isotrig/sampling.hpp"

namespace isotrig {

namespace {

CloudPoint ray_point(const Eigen::VectorXd& d, double lambda) {
  CloudPoint p;
  p.direction = d;
  p.lambda = lambda;
  p.flagged = !std::isfinite(lambda) || !(lambda > 0.0);
  if (!p.flagged) p.point = lambda * d;
  return p;
}

double oracle(const TriggeredSystem& sys, const Eigen::VectorXd& z, const IntegratorConfig& cfg) {
  return sys.gamma(z) < 0.0 ? event_time_oracle(sys, z, cfg) : 0.0;
}

// lambda with tau(lambda d) = t*, assuming tau decreases along the ray.
double bisect_ray(const TriggeredSystem& sys, const Eigen::VectorXd& d, double t_star,
                  const IntegratorConfig& cfg, double time_tol) {
  double lo = 1.0, hi = 1.0;
  double t_lo = oracle(sys, lo * d, cfg), t_hi = t_lo;
  for (int k = 0; k < 200 && !(t_lo > t_star); ++k) t_lo = oracle(sys, (lo *= 0.5) * d, cfg);
  for (int k = 0; k < 200 && !(t_hi < t_star); ++k) t_hi = oracle(sys, (hi *= 2.0) * d, cfg);
  if (!(t_lo > t_star) || !(t_hi < t_star)) return kInf;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double t = oracle(sys, mid * d, cfg);
    if (std::abs(t - t_star) <= time_tol || mid <= lo || mid >= hi) return mid;
    if (t > t_star) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string cloud_kind_name(CloudKind k) {
  switch (k) {
    case CloudKind::Approx: return "approx";
    case CloudKind::Exact: return "exact";
    default: return "sphere";
  }
}

CloudKind parse_cloud_kind(const std::string& name) {
  if (name == "approx") return CloudKind::Approx;
  if (name == "exact") return CloudKind::Exact;
  if (name == "sphere") return CloudKind::Sphere;
  throw std::invalid_argument("unknown manifold kind '" + name + "'");
}

double ManifoldCloud::mean_radius() const {
  double s = 0.0;
  std::size_t k = 0;
  for (const auto& p : points)
    if (!p.flagged) {
      s += p.point.norm();
      ++k;
    }
  return k ? s / static_cast<double>(k) : 0.0;
}

std::vector<Eigen::VectorXd> slice_directions(std::size_t n, bool homogenized, std::size_t count,
                                              std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  const auto ni = static_cast<Eigen::Index>(n);
  for (const auto& x : sphere_directions(n, count, seed)) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * ni + (homogenized ? 1 : 0));
    d.head(ni) = x;
    if (homogenized) d(d.size() - 1) = 1.0;
    out.push_back(std::move(d));
  }
  return out;
}

ManifoldCloud sample_approx(const ComparisonModel& cm, const LieChain& chain, double xi,
                            const std::vector<Eigen::VectorXd>& directions) {
  ManifoldCloud c;
  c.kind = CloudKind::Approx;
  c.t_star = cm.t_star;
  const auto scales = ray_scales(cm, chain, xi, directions);
  for (std::size_t k = 0; k < directions.size(); ++k) c.points.push_back(ray_point(directions[k], scales[k]));
  return c;
}

ManifoldCloud sample_exact(const TriggeredSystem& sys, std::optional<double> xi,
                           const std::vector<Eigen::VectorXd>& directions, double t_star,
                           const IntegratorConfig& cfg, double time_tol) {
  if (!(t_star > 0.0)) throw std::invalid_argument("t_star must be positive");
  ManifoldCloud c;
  c.kind = CloudKind::Exact;
  c.t_star = t_star;
  for (const auto& d : directions) {
    double lambda = kInf;
    if (xi) {
      const double tau = oracle(sys, d, cfg);
      if (std::isfinite(tau) && tau > 0.0) lambda = std::pow(tau / t_star, 1.0 / *xi);
    } else {
      lambda = bisect_ray(sys, d, t_star, cfg, time_tol);
    }
    c.points.push_back(ray_point(d, lambda));
  }
  return c;
}

ManifoldCloud sphere_cloud(const std::vector<Eigen::VectorXd>& directions, double radius, double t_star) {
  ManifoldCloud c;
  c.kind = CloudKind::Sphere;
  c.t_star = t_star;
  for (const auto& d : directions) c.points.push_back(ray_point(d, radius / d.norm()));
  return c;
}

void write_clouds_csv(std::ostream& os, const std::vector<ManifoldCloud>& clouds) {
  std::size_t dim = 0;
  for (const auto& c : clouds)
    if (!c.points.empty()) dim = static_cast<std::size_t>(c.points.front().direction.size());
  os << "direction";
  for (std::size_t i = 1; i <= dim; ++i) os << ",d" << i;
  os << ",lambda";
  for (std::size_t i = 1; i <= dim; ++i) os << ",z" << i;
  os << ",kind,flag\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& c : clouds) {
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      const auto& p = c.points[k];
      const Eigen::VectorXd u = p.direction.normalized();
      os << k;
      for (Eigen::Index i = 0; i < u.size(); ++i) os << ',' << num(u(i));
      os << ',' << (p.flagged ? "inf" : num(p.lambda * p.direction.norm()));  // radius along u
      for (Eigen::Index i = 0; i < u.size(); ++i) os << ',' << (p.flagged ? "nan" : num(p.point(i)));
      os << ',' << cloud_kind_name(c.kind) << ',' << (p.flagged ? 1 : 0) << '\n';
    }
  }
}

}  // namespace isotrig
