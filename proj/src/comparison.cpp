#include "isotrig/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isotrig/linalg.hpp"
#include "isotrig/lp.hpp"
#include "isotrig/polyroot.hpp"

namespace isotrig {

namespace {

// Scaled residuals at rounding level count as satisfied (exact linear identities).
constexpr double kResidualTol = 1e-12;

// Rows: samples; columns: L^0 .. L^p.
Eigen::MatrixXd lie_values(const LieChain& chain, const std::vector<Eigen::VectorXd>& pts) {
  const auto cols = static_cast<std::size_t>(chain.order() + 1);
  Eigen::MatrixXd V(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(cols));
  std::vector<double> scratch;
  Eigen::VectorXd out;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    chain.eval(pts[k], cols, out, scratch);
    V.row(static_cast<Eigen::Index>(k)) = out.transpose();
  }
  return V;
}

Eigen::VectorXd scaled_residuals(const Eigen::MatrixXd& V, const Eigen::VectorXd& chi, bool reversed) {
  const Eigen::Index p = chi.size();
  Eigen::VectorXd r = V.col(p) - V.leftCols(p) * chi;
  if (reversed) r = -r;
  const Eigen::VectorXd s = V.cwiseAbs().rowwise().sum();
  for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = s(k) > 0.0 ? r(k) / s(k) : 0.0;
  return r;
}

// Appends the rows of `cand` with positive residual, worst first. False if there are none.
bool append_violators(Eigen::MatrixXd& rows, const Eigen::MatrixXd& cand, const Eigen::VectorXd& r,
                      std::size_t max_added) {
  std::vector<Eigen::Index> bad;
  for (Eigen::Index k = 0; k < r.size(); ++k)
    if (r(k) > kResidualTol) bad.push_back(k);
  if (bad.empty()) return false;
  std::sort(bad.begin(), bad.end(), [&](auto a, auto b) { return r(a) > r(b); });
  if (bad.size() > max_added) bad.resize(max_added);
  Eigen::MatrixXd grown(rows.rows() + static_cast<Eigen::Index>(bad.size()), rows.cols());
  grown.topRows(rows.rows()) = rows;
  for (std::size_t i = 0; i < bad.size(); ++i)
    grown.row(rows.rows() + static_cast<Eigen::Index>(i)) = cand.row(bad[i]).head(rows.cols());
  rows = std::move(grown);
  return true;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) { return seed * 7919ULL + k * 104729ULL; }

}  // namespace

ComparisonModel ComparisonModel::from_chi(const Eigen::VectorXd& chi, bool reversed) {
  if (chi.size() < 2) throw std::invalid_argument("comparison order must be at least 2");
  ComparisonModel cm;
  cm.p = static_cast<int>(chi.size());
  cm.chi = chi;
  cm.A = companion(chi);
  cm.reversed = reversed;
  return cm;
}

void ComparisonModel::set_t_star(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("t_star must be positive");
  t_star = t;
  expAt = matrix_exp(A, t);
}

Eigen::VectorXd bound_evolve(const ComparisonModel& cm, const Eigen::VectorXd& y0, double t) {
  if (t < 0.0) throw std::invalid_argument("bound_evolve: negative time");
  if (t == 0.0) return y0;
  if (t == cm.t_star && cm.expAt.size() > 0) return cm.expAt * y0;
  return matrix_exp(cm.A, t) * y0;
}

double scaled_residual(const LieChain& chain, const Eigen::VectorXd& chi, bool reversed,
                       const Eigen::VectorXd& z) {
  const Eigen::Index p = chi.size();
  const Eigen::VectorXd v = chain.eval(z, static_cast<std::size_t>(p + 1));
  double r = v(p) - v.head(p).dot(chi);
  if (reversed) r = -r;
  const double s = v.cwiseAbs().sum();
  return s > 0.0 ? r / s : 0.0;
}

VerificationReport verify_chi(const LieChain& chain, const Eigen::VectorXd& chi, bool reversed,
                              const Region& region, std::size_t samples, std::uint64_t seed) {
  if (chain.order() < chi.size()) throw std::invalid_argument("Lie chain shorter than the comparison order");
  const std::size_t n = (chain.dim() - (chain.homogenized() ? 1 : 0)) / 2;
  const auto pts = sample_region(region, n, chain.homogenized(), samples, seed, SampleStream::Verification, &chain);
  Eigen::MatrixXd V = lie_values(chain, pts);
  const Eigen::MatrixXd Vp = V.leftCols(chi.size() + 1);
  const Eigen::VectorXd r = scaled_residuals(Vp, chi, reversed);
  VerificationReport rep;
  rep.samples = pts.size();
  rep.max_scaled_residual = r.size() ? r.maxCoeff() : 0.0;
  rep.violations = static_cast<std::size_t>((r.array() > kResidualTol).count());
  rep.pass = rep.violations == 0;
  return rep;
}

ComparisonModel search_chi(const LieChain& chain, const Region& region, const SearchConfig& cfg, bool reversed) {
  const int p = chain.order();
  if (p < 2) throw std::invalid_argument("comparison order must be at least 2");
  const std::size_t n = (chain.dim() - (chain.homogenized() ? 1 : 0)) / 2;
  const bool hom = chain.homogenized();
  const double sign = reversed ? -1.0 : 1.0;

  const Eigen::MatrixXd train =
      lie_values(chain, sample_region(region, n, hom, cfg.training, cfg.seed, SampleStream::Training, &chain));

  double best_violation = kInf;
  Eigen::MatrixXd rows = train;
  for (double delta : cfg.deltas) {
    for (int refresh = 0; refresh < 3; ++refresh) {
      const Eigen::MatrixXd pool = lie_values(
          chain, sample_region(region, n, hom, cfg.training * cfg.pool_factor, mix(cfg.seed, refresh),
                               SampleStream::Pool, &chain));
      Eigen::VectorXd chi;
      bool converged = false;
      for (int round = 0; round < cfg.max_rounds; ++round) {
        // sign * (L^p - a.chi) <= -delta * s  for every row, tightest on average.
        const Eigen::Index N = rows.rows();
        const Eigen::VectorXd s = rows.cwiseAbs().rowwise().sum();
        Eigen::MatrixXd G(N, p);
        Eigen::VectorXd h(N);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
        for (Eigen::Index k = 0; k < N; ++k) {
          const Eigen::RowVectorXd a = rows.row(k).head(p) / s(k);
          G.row(k) = -sign * a;
          h(k) = -delta - sign * rows(k, p) / s(k);
          c += sign * a.transpose();
        }
        const LpResult lp = solve_lp(G, h, c);
        if (lp.status != LpStatus::Optimal) break;
        chi = lp.x;
        const Eigen::VectorXd r = scaled_residuals(pool, chi, reversed);
        if (!append_violators(rows, pool, r, cfg.max_added_per_round)) {
          converged = true;
          break;
        }
      }
      if (!converged) break;  // LP infeasible or exchange did not settle: relax delta

      // Independent check; its violators seed the next refresh.
      const Eigen::MatrixXd ver = lie_values(
          chain, sample_region(region, n, hom, cfg.verification, mix(cfg.seed, 100 + refresh),
                               SampleStream::Verification, &chain));
      const Eigen::VectorXd rv = scaled_residuals(ver.leftCols(p + 1), chi, reversed);
      const double worst = rv.size() ? rv.maxCoeff() : 0.0;
      if (!(worst > kResidualTol)) {
        ComparisonModel cm = ComparisonModel::from_chi(chi, reversed);
        cm.region = region;
        cm.margin = std::max(0.0, -worst);
        cm.training_samples = static_cast<std::size_t>(rows.rows());
        cm.verification_samples = static_cast<std::size_t>(ver.rows());
        return cm;
      }
      append_violators(rows, ver, rv, cfg.max_added_per_round);
      best_violation = std::min(best_violation, worst);
    }
  }
  throw InfeasibleError("no comparison coefficients of order " + std::to_string(p) +
                        " satisfy the Lie inequality on the region (best verification residual " +
                        std::to_string(best_violation) + ")");
}

std::vector<double> ray_scales(const ComparisonModel& cm, const LieChain& chain, double xi,
                               const std::vector<Eigen::VectorXd>& directions) {
  if (cm.expAt.size() == 0) throw std::logic_error("comparison model has no t_star");
  std::vector<double> out;
  out.reserve(directions.size());
  std::vector<double> scratch;
  Eigen::VectorXd mu;
  for (const auto& d : directions) {
    chain.eval(d, static_cast<std::size_t>(cm.p), mu, scratch);
    const Eigen::VectorXd beta = cm.expAt.row(0).transpose().cwiseProduct(mu);
    if (beta(0) >= 0.0) {
      out.push_back(0.0);
      continue;
    }
    const double q = min_positive_root({beta.data(), static_cast<std::size_t>(beta.size())});
    out.push_back(std::isfinite(q) ? std::pow(q, 1.0 / xi) : kInf);
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw std::invalid_argument("log_grid: bad bounds");
  std::vector<double> g;
  const double step = 1.0 / per_decade;
  const double l0 = std::log10(lo), l1 = std::log10(hi);
  for (int k = 0;; ++k) {
    const double e = l0 + k * step;
    if (e > l1 + 1e-12) break;
    g.push_back(std::pow(10.0, e));
  }
  return g;
}

double select_t_star(ComparisonModel cm, const LieChain& chain, double xi,
                     const std::vector<Eigen::VectorXd>& directions, const std::vector<double>& grid) {
  const double r_hi = cm.region.radius;
  const double r_lo = cm.region.radius * cm.region.inner_ratio;
  for (double t : grid) {
    cm.set_t_star(t);
    const auto scales = ray_scales(cm, chain, xi, directions);
    bool any = false, inside = true;
    for (std::size_t k = 0; k < scales.size() && inside; ++k) {
      if (!std::isfinite(scales[k])) continue;
      const double r = scales[k] * directions[k].norm();
      any = true;
      inside = r <= r_hi && r >= r_lo;
    }
    if (any && inside) return t;
  }
  throw std::runtime_error("no t_star on the grid places the approximate isochrone inside the region");
}

}  // namespace isotrig
