#include "isotrig/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace isotrig {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;

// Standard form  min cost'y, A y = b, y >= 0  with b >= 0. Columns [0, ncols)
// are structural, [ncols, ncols + m) artificial.
class Simplex {
 public:
  Simplex(Eigen::MatrixXd A, Eigen::VectorXd b) : A_(std::move(A)), b_(std::move(b)) {
    m_ = A_.rows();
    n_ = A_.cols();
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    refactor();
  }

  // Returns false on unboundedness.
  bool run(const Eigen::VectorXd& cost, bool allow_artificial, int& iters, int max_iters) {
    int degenerate = 0;
    while (iters < max_iters) {
      ++iters;
      const Eigen::VectorXd cb = basic_costs(cost);
      const Eigen::VectorXd pi = Binv_.transpose() * cb;
      const bool bland = degenerate > 50;
      Eigen::Index enter = -1;
      double best = -kCostTol;
      const Eigen::Index limit = allow_artificial ? n_ + m_ : n_;
      const Eigen::VectorXd reduced = cost.head(n_) - A_.transpose() * pi;
      for (Eigen::Index j = 0; j < limit; ++j) {
        const double d = j < n_ ? reduced(j) : column_cost(cost, j) - pi(j - n_);
        if (d >= best || is_basic(j)) continue;
        best = d;
        enter = j;
        if (bland) break;
      }
      if (enter < 0) return true;
      const Eigen::VectorXd u = Binv_ * column(enter);
      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (u(i) <= kPivotTol) continue;
        const double r = xb_(i) / u(i);
        if (r < ratio - 1e-15 ||
            (r <= ratio + 1e-15 && leave >= 0 && basis_[i] < basis_[static_cast<std::size_t>(leave)])) {
          ratio = r;
          leave = i;
        }
      }
      if (leave < 0) return false;
      degenerate = ratio <= 1e-14 ? degenerate + 1 : 0;
      basis_[static_cast<std::size_t>(leave)] = enter;
      refactor();
    }
    return true;
  }

  // Pivot zero-level artificials out of the basis where a structural column allows it.
  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (is_basic(j)) continue;
        const Eigen::VectorXd u = Binv_ * column(j);
        if (std::abs(u(i)) > 1e-7) {
          basis_[static_cast<std::size_t>(i)] = j;
          refactor();
          break;
        }
      }
    }
  }

  double objective(const Eigen::VectorXd& cost) const { return basic_costs(cost).dot(xb_); }
  Eigen::VectorXd duals(const Eigen::VectorXd& cost) const { return Binv_.transpose() * basic_costs(cost); }

 private:
  Eigen::VectorXd column(Eigen::Index j) const {
    if (j < n_) return A_.col(j);
    return Eigen::VectorXd::Unit(m_, j - n_);
  }
  double column_cost(const Eigen::VectorXd& cost, Eigen::Index j) const { return j < cost.size() ? cost(j) : 0.0; }
  Eigen::VectorXd basic_costs(const Eigen::VectorXd& cost) const {
    Eigen::VectorXd cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb(i) = column_cost(cost, basis_[static_cast<std::size_t>(i)]);
    return cb;
  }
  bool is_basic(Eigen::Index j) const {
    for (auto b : basis_)
      if (b == j) return true;
    return false;
  }
  void refactor() {
    Eigen::MatrixXd B(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = column(basis_[static_cast<std::size_t>(i)]);
    Binv_ = B.fullPivLu().inverse();
    xb_ = (Binv_ * b_).cwiseMax(0.0);
  }

  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::Index m_ = 0, n_ = 0;
  std::vector<Eigen::Index> basis_;
  Eigen::MatrixXd Binv_;
  Eigen::VectorXd xb_;
};

}  // namespace

LpResult solve_lp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                  int max_iterations) {
  if (G.cols() != c.size() || G.rows() != h.size()) throw std::invalid_argument("solve_lp: dimension mismatch");
  const Eigen::Index p = c.size();
  const Eigen::Index N = G.rows();

  // Dual rows G' y = -c, flipped so the right-hand side is nonnegative.
  Eigen::VectorXd flip = Eigen::VectorXd::Ones(p);
  Eigen::VectorXd b = -c;
  for (Eigen::Index i = 0; i < p; ++i)
    if (b(i) < 0) flip(i) = -1.0;
  Eigen::MatrixXd A = flip.asDiagonal() * G.transpose();
  b = flip.cwiseProduct(b);

  Simplex sx(A, b);
  LpResult res;
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(N + p);
  phase1.tail(p).setOnes();
  sx.run(phase1, true, res.iterations, max_iterations);
  if (res.iterations >= max_iterations) return res;
  if (sx.objective(phase1) > 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
    res.status = LpStatus::Unbounded;  // dual infeasible
    return res;
  }
  sx.drive_out_artificials();
  if (!sx.run(h, false, res.iterations, max_iterations)) {
    res.status = LpStatus::Infeasible;  // dual unbounded
    return res;
  }
  if (res.iterations >= max_iterations) return res;
  res.x = flip.cwiseProduct(sx.duals(h));
  res.objective = c.dot(res.x);
  res.status = LpStatus::Optimal;
  return res;
}

}  // namespace isotrig
