#pragma once

#include <limits>
#include <span>
#include <vector>

namespace isotrig {

enum class Rounding { Nearest, Down, Up };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sturm chain of sum c[i] q^i (ascending coefficients).
class SturmChain {
 public:
  explicit SturmChain(std::span<const double> coeffs);

  int degree() const { return chain_.empty() ? -1 : static_cast<int>(chain_.front().size()) - 1; }
  /// Number of distinct real roots in (a, b].
  int count(double a, double b) const;
  long double value(long double q) const;

 private:
  int variations(long double q) const;
  std::vector<std::vector<long double>> chain_;
};

/// Smallest strictly positive real root of sum c[i] q^i, or +inf if there is none.
/// Down returns a value that does not exceed the root (bracket end shrunk by a
/// relative 1e-9), Up one that is not below it.
double min_positive_root(std::span<const double> coeffs, Rounding rounding = Rounding::Nearest,
                         double rel_tol = 1e-12);

}  // namespace isotrig
