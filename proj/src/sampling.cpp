#include "isotrig/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "isotrig/model.hpp"

namespace isotrig {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43,  47,  53,
                           59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(std::uint64_t i, int base) {
  const double inv = 1.0 / base;
  double f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

// Consumes coordinates of a Halton point in order.
class Cursor {
 public:
  explicit Cursor(const Eigen::VectorXd& u) : u_(u) {}
  double uniform() { return u_(pos_++); }

  // Box-Muller on consecutive coordinate pairs.
  Eigen::VectorXd gaussian(std::size_t k) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; i += 2) {
      const double r = std::sqrt(-2.0 * std::log(std::max(uniform(), 1e-300)));
      const double a = 2.0 * std::numbers::pi * uniform();
      g(static_cast<Eigen::Index>(i)) = r * std::cos(a);
      if (i + 1 < k) g(static_cast<Eigen::Index>(i + 1)) = r * std::sin(a);
    }
    return g;
  }
  Eigen::VectorXd direction(std::size_t k) {
    Eigen::VectorXd g = gaussian(k);
    const double nrm = g.norm();
    if (nrm == 0.0) {
      g.setZero();
      g(0) = 1.0;
      return g;
    }
    return g / nrm;
  }

 private:
  const Eigen::VectorXd& u_;
  Eigen::Index pos_ = 0;
};

// Uniform on [lo, hi] with a tenth of the mass on each end point: the Lie
// inequality is not scale invariant, so it is tightest on the boundary.
double with_ends(double u, double lo, double hi) {
  if (u < 0.1) return lo;
  if (u > 0.9) return hi;
  return lo + (hi - lo) * (u - 0.1) / 0.8;
}

// Same with extra mass on lo only. Used for the error magnitude, whose upper end
// can be the trigger surface itself.
double with_low_end(double u, double lo, double hi) {
  return u < 0.1 ? lo : lo + (hi - lo) * (u - 0.1) / 0.9;
}

std::size_t even(std::size_t k) { return k + (k % 2); }

std::uint64_t base_index(std::uint64_t seed, SampleStream stream) {
  return 1 + seed * 10000019ULL + static_cast<std::uint64_t>(stream) * 1000000007ULL;
}

}  // namespace

Halton::Halton(int dim) : dim_(dim) {
  if (dim < 1 || dim > static_cast<int>(std::size(kPrimes))) throw std::invalid_argument("Halton: unsupported dimension");
}

Eigen::VectorXd Halton::point(std::uint64_t index) const {
  Eigen::VectorXd u(dim_);
  for (int d = 0; d < dim_; ++d) u(d) = radical_inverse(index, kPrimes[d]);
  return u;
}

std::vector<Eigen::VectorXd> sample_region(const Region& region, std::size_t n, bool homogenized,
                                           std::size_t count, std::uint64_t seed, SampleStream stream,
                                           const LieChain* chain) {
  if (!(region.radius > 0.0)) throw std::invalid_argument("region radius must be positive");
  if (region.trigger_sublevel && chain == nullptr)
    throw std::invalid_argument("trigger_sublevel sampling needs the trigger");
  const bool split = region.error_ratio.has_value();
  const std::size_t dirs = split ? even(n) * 2 : even(2 * n);
  const Halton halton(static_cast<int>(dirs + 3));
  const std::size_t dim = 2 * n + (homogenized ? 1 : 0);
  const double r0 = region.radius * region.inner_ratio;

  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  std::uint64_t index = base_index(seed, stream);
  const std::uint64_t max_draws = 1000 * static_cast<std::uint64_t>(count) + 1000;
  for (std::uint64_t draw = 0; out.size() < count; ++draw, ++index) {
    if (draw > max_draws) throw std::runtime_error("region sampling rejected too many points");
    const Eigen::VectorXd u = halton.point(index);
    Cursor cur(u);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    const auto ni = static_cast<Eigen::Index>(n);
    if (split) {
      const Eigen::VectorXd xd = cur.direction(n);
      const Eigen::VectorXd ed = cur.direction(n);
      const double a = with_low_end(cur.uniform(), 0.0, *region.error_ratio);
      v.head(ni) = xd;
      v.segment(ni, ni) = a * ed;
    } else {
      v.head(2 * ni) = cur.direction(2 * n);
      cur.uniform();
    }
    if (homogenized) {
      const double b = region.max_state_ratio * std::cbrt(cur.uniform());
      v.head(2 * ni) *= b;
      v(v.size() - 1) = 1.0;
    } else {
      cur.uniform();
    }
    const double r = with_ends(cur.uniform(), r0, region.radius);
    Eigen::VectorXd z = v.normalized() * r;
    if (region.trigger_sublevel && chain->gamma(z) > 0.0) continue;
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<Eigen::VectorXd> sphere_directions(std::size_t dim, std::size_t count, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  if (dim == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      Eigen::VectorXd d(2);
      d << std::cos(a), std::sin(a);
      out.push_back(d);
    }
    return out;
  }
  const Halton halton(static_cast<int>(even(dim)));
  for (std::size_t k = 0; k < count; ++k) {
    const Eigen::VectorXd u = halton.point(base_index(seed, SampleStream::Test) + k);
    Cursor cur(u);
    out.push_back(cur.direction(dim));
  }
  return out;
}

}  // namespace isotrig
