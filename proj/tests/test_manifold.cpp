#include <cmath>
#include <sstream>

#include "doctest.h"
#include "isotrig/manifold.hpp"
#include "isotrig/selftrigger.hpp"
#include "models.hpp"

using namespace isotrig;
using namespace testmodels;

namespace {

struct Example1 {
  ControlModel m = example1(0.1);
  ExtendedField Z = build_extended(m);
  LieChain chain{Z, m.gamma, 3};
  TriggeredSystem sys{Z, m.gamma};
  ComparisonModel cm = ComparisonModel::from_chi(Eigen::Vector3d(105.970, 0.021, 1.033));
  Example1() { cm.set_t_star(1e-3); }
};

}  // namespace

TEST_CASE("slice directions") {
  const auto d = slice_directions(2, false, 8);
  REQUIRE(d.size() == 8);
  CHECK(d[0] == vec({1, 0, 0, 0}));
  const auto h = slice_directions(3, true, 5, 1);
  for (const auto& v : h) {
    CHECK(v.size() == 7);
    CHECK(v.head(3).norm() == doctest::Approx(1.0));
    CHECK(v.segment(3, 3).isZero());
    CHECK(v(6) == 1.0);
  }
}

TEST_CASE("approximate points lie on the approximate isochrone") {
  Example1 ex;
  const auto dirs = slice_directions(2, false, 36);
  const auto cloud = sample_approx(ex.cm, ex.chain, 2.0, dirs);
  for (const auto& p : cloud.points) {
    REQUIRE_FALSE(p.flagged);
    const Eigen::VectorXd y0 = ex.chain.mu(p.point, 3);
    CHECK(std::abs(bound_evolve(ex.cm, y0, 1e-3)(0)) <= 1e-9 * y0.cwiseAbs().sum());
    // A point already on the manifold maps to lambda = 1.
    const auto again = sample_approx(ex.cm, ex.chain, 2.0, {p.point});
    CHECK(again.points[0].lambda == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("exact cloud: homogeneous shortcut agrees with bisection") {
  Example1 ex;
  const auto dirs = slice_directions(2, false, 16);
  const IntegratorConfig cfg;
  const auto a = sample_exact(ex.sys, 2.0, dirs, 1e-3, cfg);
  const auto b = sample_exact(ex.sys, std::nullopt, dirs, 1e-3, cfg);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    CHECK(a.points[k].lambda == doctest::Approx(b.points[k].lambda).epsilon(1e-6));
    CHECK(event_time_oracle(ex.sys, a.points[k].point, cfg) == doctest::Approx(1e-3).epsilon(1e-8));
  }
}

TEST_CASE("exact cloud encloses the approximation") {
  // Coefficients verified on an annulus that contains the 1 ms isochrone.
  Example1 ex;
  Region r;
  r.radius = 2.0;
  r.inner_ratio = 0.25;
  r.error_ratio = 0.0127 * 0.1;
  auto cm = search_chi(ex.chain, r, SearchConfig{});
  cm.set_t_star(1e-3);
  const auto dirs = slice_directions(2, false, 24);
  const auto approx = sample_approx(cm, ex.chain, 2.0, dirs);
  const auto exact = sample_exact(ex.sys, 2.0, dirs, 1e-3, IntegratorConfig{});
  for (std::size_t k = 0; k < dirs.size(); ++k) CHECK(approx.points[k].lambda <= exact.points[k].lambda);
  // Not a sphere: the radius varies along the curve.
  double lo = 1e9, hi = 0.0;
  for (const auto& p : approx.points) {
    lo = std::min(lo, p.lambda);
    hi = std::max(hi, p.lambda);
  }
  CHECK(hi - lo > 0.05 * hi);
}

TEST_CASE("flagged rays") {
  // Gamma already nonnegative on the ray: no crossing for either cloud.
  Example1 ex;
  const std::vector<Eigen::VectorXd> dirs{vec({0.0, 0.0, 1.0, 0.0})};
  CHECK(sample_approx(ex.cm, ex.chain, 2.0, dirs).points[0].flagged);
  CHECK(sample_exact(ex.sys, 2.0, dirs, 1e-3, IntegratorConfig{}).points[0].flagged);
}

TEST_CASE("cloud CSV") {
  const auto dirs = slice_directions(2, false, 4);
  auto s = sphere_cloud(dirs, 0.5, 1e-3);
  s.points[1].flagged = true;
  std::ostringstream os;
  write_clouds_csv(os, {s});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "direction,d1,d2,d3,d4,lambda,z1,z2,z3,z4,kind,flag");
  std::getline(is, line);
  CHECK(line == "0,1,0,0,0,0.5,0.5,0,0,0,sphere,0");
  std::getline(is, line);
  CHECK(line.substr(line.size() - 9) == ",sphere,1");
  CHECK(s.mean_radius() == doctest::Approx(0.5));
  CHECK(parse_cloud_kind("exact") == CloudKind::Exact);
  CHECK_THROWS_AS(parse_cloud_kind("mesh"), std::invalid_argument);
}
