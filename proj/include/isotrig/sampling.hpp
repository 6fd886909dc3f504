#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

namespace isotrig {

class LieChain;

/// Radical-inverse (Halton) sequence in up to 32 dimensions.
class Halton {
 public:
  explicit Halton(int dim);
  int dim() const { return dim_; }
  Eigen::VectorXd point(std::uint64_t index) const;

 private:
  int dim_;
};

/// Origin-centred annulus in extended-state space.
///  - error_ratio: sample only |e| <= error_ratio |x|
///  - max_state_ratio: for homogenized states, |x| <= max_state_ratio * w
///  - trigger_sublevel: keep only points with gamma <= 0
struct Region {
  double radius = 1.0;
  double inner_ratio = 1e-3;
  std::optional<double> error_ratio;
  double max_state_ratio = 1.0;
  bool trigger_sublevel = false;
};

enum class SampleStream : std::uint64_t { Training = 0, Pool = 1, Verification = 2, Test = 3 };

/// Quasi-random points of the region for an n-dimensional plant (state dimension
/// 2n, or 2n+1 with w). `chain` is needed only when trigger_sublevel is set.
std::vector<Eigen::VectorXd> sample_region(const Region& region, std::size_t n, bool homogenized,
                                           std::size_t count, std::uint64_t seed, SampleStream stream,
                                           const LieChain* chain = nullptr);

/// Quasi-random unit vectors in R^dim (evenly spaced angles when dim == 2).
std::vector<Eigen::VectorXd> sphere_directions(std::size_t dim, std::size_t count, std::uint64_t seed = 0);

}  // namespace isotrig
