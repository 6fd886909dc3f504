#pragma once

#include <Eigen/Dense>

namespace isotrig {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
};

/// min c'x  s.t.  G x <= h, x free.
/// Solved through the dual (min h'y, G'y = -c, y >= 0) with a dense revised simplex,
/// which keeps the basis at size dim(x) however many rows G has.
LpResult solve_lp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                  int max_iterations = 100000);

}  // namespace isotrig
