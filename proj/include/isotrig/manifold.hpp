#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "isotrig/comparison.hpp"
#include "isotrig/model.hpp"
#include "isotrig/sim.hpp"

namespace isotrig {

enum class CloudKind { Approx, Exact, Sphere };

std::string cloud_kind_name(CloudKind k);
/// Throws std::invalid_argument on an unknown name.
CloudKind parse_cloud_kind(const std::string& name);

struct CloudPoint {
  Eigen::VectorXd direction;
  double lambda = 0.0;  // +inf when flagged
  Eigen::VectorXd point;
  bool flagged = false;  // no crossing on this ray
};

struct ManifoldCloud {
  CloudKind kind = CloudKind::Approx;
  double t_star = 0.0;
  std::vector<CloudPoint> points;

  /// Mean |point| over unflagged points.
  double mean_radius() const;
};

/// Full-state ray directions for the e = 0 slice: x on the unit sphere, e = 0 and,
/// for homogenized states, w = 1.
std::vector<Eigen::VectorXd> slice_directions(std::size_t n, bool homogenized, std::size_t count,
                                              std::uint64_t seed = 0);

/// Ray intersections with the approximate isochrone at cm.t_star.
ManifoldCloud sample_approx(const ComparisonModel& cm, const LieChain& chain, double xi,
                            const std::vector<Eigen::VectorXd>& directions);

/// Ray intersections with the exact isochrone. With `xi` set the system is taken to be
/// homogeneous and lambda = (tau(d) / t*)^(1/xi); otherwise lambda is bisected on the
/// oracle directly until |tau(lambda d) - t*| <= time_tol.
ManifoldCloud sample_exact(const TriggeredSystem& sys, std::optional<double> xi,
                           const std::vector<Eigen::VectorXd>& directions, double t_star,
                           const IntegratorConfig& cfg, double time_tol = 1e-10);

/// Points at a fixed radius on the same rays.
ManifoldCloud sphere_cloud(const std::vector<Eigen::VectorXd>& directions, double radius, double t_star);

void write_clouds_csv(std::ostream& os, const std::vector<ManifoldCloud>& clouds);

}  // namespace isotrig
