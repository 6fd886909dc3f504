// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "app.hpp"
#include "isotrig/manifold.hpp"
#include "isotrig/selftrigger.hpp"
#include "isotrig/sim.hpp"

using namespace isotrig;
using namespace isotrig::app;

namespace {

const std::string kConfigs = ISOTRIG_CONFIG_DIR;

int failures = 0;

void report(int id, const std::string& what, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string num(double v, int prec = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

// Uniform in the unit ball of R^n.
std::vector<Eigen::VectorXd> unit_ball(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  std::vector<Eigen::VectorXd> out;
  while (out.size() < count) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = g(rng);
    const double r = std::pow(u(rng), 1.0 / static_cast<double>(n));
    out.push_back(r * d.normalized());
  }
  return out;
}

Eigen::VectorXd plant_state(const Eigen::VectorXd& x) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * x.size());
  z.head(x.size()) = x;
  return z;
}

double oracle(const System& sys, const Eigen::VectorXd& x, const IntegratorConfig& cfg) {
  const Eigen::VectorXd z = plant_state(x);
  return sys.plant.gamma(z) < 0.0 ? event_time_oracle(sys.plant, z, cfg) : 0.0;
}

struct Setup {
  RunConfig cfg;
  Artifact art;
};

Setup load(const std::string& name) {
  Setup s{load_config(kConfigs + "/" + name), {}};
  std::ostringstream log;
  s.art = synthesize(s.cfg, log);
  return s;
}

void soundness(const Setup& ex1, const Setup& rb) {
  const double tol = 1e-9;
  std::size_t states = 0, checks = 0, violations = 0;
  double worst = -kInf;
  auto check = [&](double bound, double tau) {
    ++checks;
    worst = std::max(worst, bound - tau);
    if (bound > tau + tol) ++violations;
  };

  {
    const System sys(ex1.cfg, 0);
    const auto& e = ex1.art.entries[0];
    for (const auto& x : unit_ball(2, 250, 11)) {
      ++states;
      const double tau = oracle(sys, x, ex1.cfg.integrator);
      check(self_trigger_bound(sys, e, Method::ClosedForm, 1, x), tau);
      check(self_trigger_bound(sys, e, Method::PolyRoot, 1, x), tau);
      for (int n = 1; n <= 3; ++n) check(self_trigger_bound(sys, e, Method::Iterative, n, x), tau);
    }
  }
  for (std::size_t run = 0; run < rb.cfg.runs(); ++run) {
    const System sys(rb.cfg, run);
    const auto& e = rb.art.entries[run];
    for (const auto& x : unit_ball(3, 84, 20 + run)) {
      ++states;
      const double tau = oracle(sys, x, rb.cfg.integrator);
      check(self_trigger_bound(sys, e, Method::ClosedForm, 1, x), tau);
      for (int n = 1; n <= 3; ++n) check(self_trigger_bound(sys, e, Method::Iterative, n, x), tau);
    }
  }
  report(1, "soundness of the lower bound", states >= 500 && violations == 0,
         std::to_string(states) + " states, " + std::to_string(checks) + " bounds, " + std::to_string(violations) +
             " violations, max(bound - tau) = " + num(worst) + " s");
}

void example1_sweep() {
  const RunConfig cfg = load_config(kConfigs + "/example1_reference.json");
  std::ostringstream log;
  const auto rows = table(cfg, synthesize(cfg, log));
  const double self_ref[] = {1.50e-3, 3.00e-3, 4.50e-3};
  const double event_ref[] = {1.55e-3, 3.06e-3, 4.58e-3};
  const double periodic_ref[] = {0.39e-3, 0.79e-3, 1.18e-3};
  bool ok = rows.size() == 3;
  std::string detail;
  for (std::size_t k = 0; ok && k < 3; ++k) {
    const auto& r = rows[k];
    ok = ok && within(*r.selftrig, self_ref[k], 0.10) && within(*r.event, event_ref[k], 0.05) &&
         std::abs(*r.periodic - periodic_ref[k]) < 1e-15;
    detail += "sigma " + num(r.param) + ": self " + num(*r.selftrig * 1e3, 4) + " ms, event " +
              num(*r.event * 1e3, 4) + " ms, periodic " + num(*r.periodic * 1e3, 4) + " ms; ";
  }
  report(2, "example 1 sweep averages", ok, detail);
}

void rigid_body_sweep() {
  const RunConfig cfg = load_config(kConfigs + "/rigid_body_reference.json");
  std::ostringstream log;
  const Artifact art = synthesize(cfg, log);
  const auto rows = table(cfg, art);
  const double iter_ref[3][3] = {{216.08, 220.14, 220.18}, {267.53, 278.29, 278.81}, {322.12, 349.97, 354.88}};
  const double event_ref[] = {220.34, 285.41, 355.75};
  bool ok = rows.size() == 3;
  std::string detail;
  for (std::size_t k = 0; ok && k < 3; ++k) {
    const auto& r = rows[k];
    ok = ok && r.selftrig_iter.size() == 3 && within(*r.event * 1e3, event_ref[k], 0.05);
    detail += "sigma " + num(r.param) + ":";
    for (std::size_t i = 0; ok && i < 3; ++i) {
      ok = ok && within(r.selftrig_iter[i] * 1e3, iter_ref[k][i], 0.10);
      detail += " " + num(r.selftrig_iter[i] * 1e3, 5);
    }
    detail += " ms, event " + num(*r.event * 1e3, 5) + " ms; ";
  }
  // Partial sums of the anytime iteration never decrease.
  std::size_t decreasing = 0;
  for (std::size_t run = 0; run < cfg.runs(); ++run) {
    const System sys(cfg, run);
    const auto& e = art.entries[run];
    for (const auto& x : cfg.initial_conditions) {
      const auto b = tau_iterative(e.low.cm, e.high->cm, sys.chain, e.xi, sys.fresh(x), 3);
      for (std::size_t i = 1; i < b.iterations.size(); ++i)
        if (b.iterations[i].partial_sum < b.iterations[i - 1].partial_sum) ++decreasing;
    }
  }
  ok = ok && decreasing == 0;
  detail += std::to_string(decreasing) + " decreasing partial sums";
  report(3, "rigid body sweep averages", ok, detail);
}

void scaling(const Setup& ex1) {
  const System sys(ex1.cfg, 0);
  const auto& e = ex1.art.entries[0];
  double worst = 0.0;
  for (const auto& x : unit_ball(2, 20, 31)) {
    const Eigen::VectorXd d = x.normalized() * 0.8;
    const double tau = oracle(sys, d, ex1.cfg.integrator);
    const double bound = self_trigger_bound(sys, e, Method::PolyRoot, 1, d);
    for (double lambda : {0.5, 2.0}) {
      const double f = std::pow(lambda, -2.0);
      worst = std::max(worst, std::abs(oracle(sys, lambda * d, ex1.cfg.integrator) / (f * tau) - 1.0));
      worst = std::max(worst, std::abs(self_trigger_bound(sys, e, Method::PolyRoot, 1, lambda * d) / (f * bound) - 1.0));
    }
  }
  report(4, "tau(lambda x) = lambda^-2 tau(x) for lambda in {0.5, 2}", worst <= 0.01,
         "max relative deviation " + num(worst) + " over event times and bounds");
}

void pendulum() {
  ControlModel m;
  m.n = 2;
  m.m = 0;
  const auto pv = plant_names(2, 0);
  m.f = {parse("x2", pv), parse("-sin(x1) - 0.1*x2", pv)};
  m.gamma = parse("x1 - pi/6", state_names(2, false));
  const ExtendedField Z = build_extended(m);
  const TriggeredSystem sys(Z, m.gamma);
  IntegratorConfig cfg;
  cfg.horizon = 20.0;

  double worst = 0.0;
  std::string detail;
  for (const auto& x0 : {std::pair{0.0, 1.0}, {0.2, 0.9}, {-0.3, 1.2}}) {
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(4);
    z0(0) = x0.first;
    z0(1) = x0.second;
    // 1: adaptive integration with event location on the dense output.
    const double t1 = event_time_oracle(sys, z0, cfg);
    // 2: fixed-step RK4 scan with linear interpolation of the crossing.
    double t2 = kInf;
    {
      const double h = 1e-4;
      Eigen::VectorXd z = z0, k1, k2, k3, k4;
      double t = 0.0;
      while (t < cfg.horizon) {
        sys.field(z, k1);
        sys.field(z + 0.5 * h * k1, k2);
        sys.field(z + 0.5 * h * k2, k3);
        sys.field(z + h * k3, k4);
        const Eigen::VectorXd zn = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        const double ga = sys.gamma(z), gb = sys.gamma(zn);
        if (ga < 0.0 && gb >= 0.0) {
          t2 = t + h * ga / (ga - gb);
          break;
        }
        z = zn;
        t += h;
      }
    }
    // 3: bisection on gamma at the end of independent integrations to time t.
    double t3 = kInf;
    if (std::isfinite(t1)) {
      auto g = [&](double t) { return sys.gamma(flow(sys, z0, t, cfg)(t)); };
      double lo = 0.5 * t1, hi = 1.5 * t1;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
      }
      t3 = 0.5 * (lo + hi);
    }
    if (!std::isfinite(t1)) worst = kInf;
    else worst = std::max({worst, std::abs(t1 - t2), std::abs(t1 - t3), std::abs(t2 - t3)});
    detail += num(t1, 8) + "/" + num(t2, 8) + "/" + num(t3, 8) + " s; ";
  }
  report(5, "pendulum event time three ways", std::isfinite(worst) && worst <= 1e-4,
         detail + "max disagreement " + num(worst) + " s");
}

void comparison_bound(const Setup& ex1) {
  const System sys(ex1.cfg, 0);
  const auto& cm = ex1.art.entries[0].low.cm;
  std::size_t checks = 0, bad = 0;
  double worst = -kInf;
  for (const auto& d : unit_ball(2, 50, 41)) {
    const Eigen::VectorXd x = d.normalized() * (0.6 + 1.2 * d.norm());  // |x| in [0.6, 1.8]
    const Eigen::VectorXd z0 = plant_state(x);
    const double tau = event_time_oracle(sys.plant, z0, ex1.cfg.integrator);
    const Trajectory tr = flow(sys.plant, z0, tau, ex1.cfg.integrator);
    const Eigen::VectorXd mu = sys.chain.mu(z0, cm.p);
    for (int k = 0; k < 50; ++k) {
      const double t = tau * k / 49.0;
      const double y1 = bound_evolve(cm, mu, t)(0);
      const double g = sys.plant.gamma(tr(t));
      const double tol = 1e-9 * std::abs(mu(0));
      ++checks;
      worst = std::max(worst, (g - y1) / std::abs(mu(0)));
      if (y1 < g - tol) ++bad;
    }
  }
  report(6, "comparison output y1 bounds gamma from above", bad == 0,
         std::to_string(checks) + " grid points, " + std::to_string(bad) + " below, max (gamma - y1)/|gamma0| = " +
             num(worst));
}

void lie_homogeneity() {
  auto check = [](const ControlModel& m, double xi, double theta, std::uint64_t seed) {
    const ExtendedField Z = homogenize_field(build_extended(m), xi);
    const Expr g = homogenize_trigger(m.gamma, m.n, theta);
    const LieChain chain(Z, g, 4);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(Z.dim()));
      for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = u(rng);
      z(z.size() - 1) = 0.5 + 0.5 * std::abs(u(rng));
      const Eigen::VectorXd a = chain.eval(z, 5);
      for (double lambda : {0.5, 1.7, 2.0}) {
        const Eigen::VectorXd b = chain.eval(lambda * z, 5);
        for (int k = 0; k <= 4; ++k) {
          const double want = std::pow(lambda, theta + 1.0 + k * xi) * a(k);
          const double scale = std::max(std::abs(want), 1e-300);
          worst = std::max(worst, std::abs(b(k) - want) / scale);
        }
      }
    }
    return worst;
  };
  ControlModel p;
  p.n = 2;
  p.m = 0;
  const auto pv = plant_names(2, 0);
  p.f = {parse("x2", pv), parse("-sin(x1) - 0.1*x2", pv)};
  p.gamma = parse("x1 - pi/6", state_names(2, false));
  const double wp = check(p, 1.0, 1.0, 51);

  const RunConfig rc = load_config(kConfigs + "/rigid_body.json");
  const System rb(rc, 0);
  const double wr = check(rb.model, 1.0, 1.0, 52);
  report(7, "Lie derivatives L^k gamma of degree theta + 1 + k xi, k = 0..4", wp <= 1e-9 && wr <= 1e-9,
         "max relative error pendulum " + num(wp) + ", rigid body " + num(wr));
}

void manifold_checks(const Setup& ex1) {
  const System sys(ex1.cfg, 0);
  const double t_star = 1e-3;
  const auto clouds = manifold(ex1.cfg, ex1.art, 0, t_star, {CloudKind::Approx, CloudKind::Exact});
  const auto& approx = clouds[0];
  const auto& exact = clouds[1];
  std::size_t early = 0, outside = 0;
  double worst = kInf;
  for (std::size_t k = 0; k < approx.points.size(); ++k) {
    const auto& a = approx.points[k];
    if (a.flagged || exact.points[k].flagged) {
      ++outside;
      continue;
    }
    const double tau = event_time_oracle(sys.plant, a.point, ex1.cfg.integrator);
    worst = std::min(worst, tau - t_star);
    if (tau < t_star - 1e-9) ++early;
    if (a.lambda > exact.points[k].lambda) ++outside;
  }
  report(8, "approximate isochrone lies inside the exact one at t* = 1 ms", approx.points.size() == 360 && early == 0 && outside == 0,
         std::to_string(approx.points.size()) + " rays, " + std::to_string(early) + " points with tau < t*, " +
             std::to_string(outside) + " rays not enclosed, min(tau - t*) = " + num(worst) + " s");
}

void xi_independence() {
  const RunConfig rc = load_config(kConfigs + "/rigid_body.json");
  const System rb(rc, 0);
  auto chain_for = [&](double xi) {
    return LieChain(homogenize_field(rb.original, xi), homogenize_trigger(rb.model.gamma, 3, 1.0), 4);
  };
  const LieChain c1 = chain_for(1.0), c2 = chain_for(2.0);
  double worst = 0.0;
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    Eigen::VectorXd z(7);
    for (Eigen::Index i = 0; i < 6; ++i) z(i) = u(rng);
    z(6) = 1.0;
    const Eigen::VectorXd a = c1.eval(z, 4), b = c2.eval(z, 4);
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()));
  }
  report(9, "mu^p(z, 1) does not depend on the homogenization degree", worst <= 1e-9,
         "50 states, max relative difference " + num(worst));
}

void two_sided(const Setup& ex1) {
  const System sys(ex1.cfg, 0);
  const auto& e = ex1.art.entries[0];
  std::size_t bad = 0, count = 0;
  double lo_gap = kInf, hi_gap = kInf;
  for (const auto& x : unit_ball(2, 100, 71)) {
    const double tau = oracle(sys, x, ex1.cfg.integrator);
    const Eigen::VectorXd z = sys.fresh(x);
    const double lower = self_trigger_bound(sys, e, Method::PolyRoot, 1, x);
    double upper = kInf;
    try {
      upper = tau_upper(e.upper->cm, sys.chain, e.xi, z);
    } catch (const ImmediateTrigger&) {
      upper = 0.0;
    }
    ++count;
    lo_gap = std::min(lo_gap, tau - lower);
    hi_gap = std::min(hi_gap, upper - tau);
    if (lower > tau + 1e-9 || tau > upper + 1e-9) ++bad;
  }
  report(10, "lower bound <= tau <= upper bound", bad == 0,
         std::to_string(count) + " states, " + std::to_string(bad) + " violations, min(tau - lower) = " + num(lo_gap) +
             " s, min(upper - tau) = " + num(hi_gap) + " s");
}

void guarded(const char* name, const std::function<void()>& f, int id) {
  try {
    f();
  } catch (const std::exception& ex) {
    report(id, name, false, std::string("exception: ") + ex.what());
  }
}

}  // namespace

int main() {
  Setup ex1, rb;
  try {
    ex1 = load("example1.json");
    rb = load("rigid_body.json");
  } catch (const std::exception& ex) {
    std::printf("FAIL setup: %s\n", ex.what());
    return 1;
  }
  guarded("soundness of the lower bound", [&] { soundness(ex1, rb); }, 1);
  guarded("example 1 sweep averages", example1_sweep, 2);
  guarded("rigid body sweep averages", rigid_body_sweep, 3);
  guarded("homogeneous scaling", [&] { scaling(ex1); }, 4);
  guarded("pendulum event time three ways", pendulum, 5);
  guarded("comparison output bounds gamma", [&] { comparison_bound(ex1); }, 6);
  guarded("Lie derivative homogeneity", lie_homogeneity, 7);
  guarded("approximate isochrone inside the exact one", [&] { manifold_checks(ex1); }, 8);
  guarded("homogenization degree independence", xi_independence, 9);
  guarded("two-sided bound", [&] { two_sided(ex1); }, 10);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures ? 1 : 0;
}
