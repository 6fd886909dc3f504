#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "isotrig/model.hpp"
#include "isotrig/sampling.hpp"

namespace isotrig {

/// No coefficient vector passed the independent verification set.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear comparison system ydot = A y for the Lie inequality
///   L^p gamma <= sum chi_i L^i gamma   (lower model, bounds gamma from above)
/// or the reversed inequality (upper model).
struct ComparisonModel {
  int p = 0;
  Eigen::VectorXd chi;
  Eigen::MatrixXd A;
  bool reversed = false;
  Region region;
  double margin = 0.0;  // -max scaled residual on the verification set
  std::size_t training_samples = 0;
  std::size_t verification_samples = 0;
  double t_star = 0.0;
  Eigen::MatrixXd expAt;  // exp(A t_star)

  static ComparisonModel from_chi(const Eigen::VectorXd& chi, bool reversed = false);
  void set_t_star(double t);
};

/// exp(A t) y0.
Eigen::VectorXd bound_evolve(const ComparisonModel& cm, const Eigen::VectorXd& y0, double t);

struct VerificationReport {
  bool pass = false;
  double max_scaled_residual = 0.0;  // max of +-(L^p - chi . L) / sum |L^i|
  std::size_t samples = 0;
  std::size_t violations = 0;
};

/// Residual of the Lie inequality at z (violations are residuals above 1e-12), signed so that <= 0 means satisfied and
/// scaled by sum_i |L^i gamma(z)|.
double scaled_residual(const LieChain& chain, const Eigen::VectorXd& chi, bool reversed,
                       const Eigen::VectorXd& z);

VerificationReport verify_chi(const LieChain& chain, const Eigen::VectorXd& chi, bool reversed,
                              const Region& region, std::size_t samples, std::uint64_t seed);

struct SearchConfig {
  std::size_t training = 2000;
  std::size_t verification = 20000;
  std::size_t pool_factor = 50;
  int max_rounds = 30;
  std::size_t max_added_per_round = 200;
  std::vector<double> deltas = {1e-3, 1e-4, 0.0};
  std::uint64_t seed = 1;
};

/// Sampled LP search for chi (order p = chain.order()).
ComparisonModel search_chi(const LieChain& chain, const Region& region, const SearchConfig& cfg,
                           bool reversed = false);

/// Points of the approximate isochrone on rays through `directions`:
/// lambda * d with lambda = q^(1/xi), q the smallest positive root of
/// sum_i expAt(0, i) L^i gamma(d) q^i. Rays without a root give lambda = +inf.
std::vector<double> ray_scales(const ComparisonModel& cm, const LieChain& chain, double xi,
                               const std::vector<Eigen::VectorXd>& directions);

/// Log grid with `per_decade` points per decade from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int per_decade = 32);

/// Smallest grid time whose approximate isochrone lies in the region annulus.
double select_t_star(ComparisonModel cm, const LieChain& chain, double xi,
                     const std::vector<Eigen::VectorXd>& directions, const std::vector<double>& grid);

}  // namespace isotrig
