#include "isotrig/polyroot.hpp"

#include <algorithm>
#include <cmath>

namespace isotrig {

namespace {

using Poly = std::vector<long double>;  // ascending

void trim(Poly& p, long double tol) {
  while (p.size() > 1 && std::abs(p.back()) <= tol) p.pop_back();
}

long double horner(const Poly& p, long double q) {
  long double v = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * q + *it;
  return v;
}

// Remainder of a / b (b has a nonzero leading coefficient).
Poly remainder(Poly a, const Poly& b) {
  const std::size_t db = b.size() - 1;
  while (a.size() >= b.size()) {
    const long double f = a.back() / b.back();
    const std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i <= db; ++i) a[shift + i] -= f * b[i];
    a.pop_back();
  }
  if (a.empty()) a.push_back(0);
  return a;
}

long double max_abs(const Poly& p) {
  long double m = 0;
  for (auto v : p) m = std::max(m, std::abs(v));
  return m;
}

constexpr long double kRelZero = 1e-14L;

}  // namespace

SturmChain::SturmChain(std::span<const double> coeffs) {
  Poly p(coeffs.begin(), coeffs.end());
  trim(p, 0);
  if (p.empty() || (p.size() == 1 && p[0] == 0)) return;
  const long double s = max_abs(p);
  for (auto& v : p) v /= s;
  chain_.push_back(p);
  if (p.size() == 1) return;
  Poly d(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = p[i] * static_cast<long double>(i);
  const long double ds = max_abs(d);
  for (auto& v : d) v /= ds;
  chain_.push_back(d);
  while (chain_.back().size() > 1) {
    Poly r = remainder(chain_[chain_.size() - 2], chain_.back());
    for (auto& v : r) v = -v;
    trim(r, kRelZero);
    const long double rs = max_abs(r);
    if (rs <= kRelZero) break;  // repeated roots: the last entry is the gcd
    for (auto& v : r) v /= rs;
    chain_.push_back(r);
  }
}

long double SturmChain::value(long double q) const { return chain_.empty() ? 0 : horner(chain_.front(), q); }

int SturmChain::variations(long double q) const {
  int changes = 0;
  int last = 0;
  for (const auto& p : chain_) {
    const long double v = horner(p, q);
    const int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

int SturmChain::count(double a, double b) const {
  if (chain_.size() < 2 || !(b > a)) return 0;
  return std::max(0, variations(a) - variations(b));
}

double min_positive_root(std::span<const double> coeffs, Rounding rounding, double rel_tol) {
  Poly p(coeffs.begin(), coeffs.end());
  trim(p, 0);
  if (p.size() <= 1) return kInf;
  if (p[0] == 0) return 0.0;

  const SturmChain chain(coeffs);
  long double bound = 0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) bound = std::max(bound, std::abs(p[i] / p.back()));
  double hi = static_cast<double>(1 + bound);
  double lo = 0.0;

  const auto sign = [&](double q) {
    const long double v = chain.value(q);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  const int s0 = sign(0.0);
  if (chain.count(0.0, hi) == 0) {
    if (sign(hi) == s0) return kInf;  // sign change without a Sturm root would be roundoff
  }

  // Shrink (lo, hi] until it holds only the smallest root, then bisect on sign
  // for simple roots and on counts for even-multiplicity ones.
  for (int it = 0; it < 2000 && hi - lo > rel_tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const int sm = sign(mid);
    if (sm == 0) {
      lo = hi = mid;
      break;
    }
    const bool root_below = sm != s0 || chain.count(0.0, mid) > 0;
    if (root_below) hi = mid;
    else lo = mid;
  }

  switch (rounding) {
    case Rounding::Down: return lo * (1.0 - 1e-9);
    case Rounding::Up: return hi * (1.0 + 1e-9);
    case Rounding::Nearest: break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace isotrig
