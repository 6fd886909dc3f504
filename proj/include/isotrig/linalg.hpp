#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace isotrig {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Companion matrix: ones on the superdiagonal, last row chi.
template <typename Derived>
MatrixX<typename Derived::Scalar> companion(const Eigen::MatrixBase<Derived>& chi) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index p = chi.size();
  if (p < 1) throw std::invalid_argument("companion: empty coefficient vector");
  MatrixX<Scalar> A = MatrixX<Scalar>::Zero(p, p);
  for (Eigen::Index i = 0; i + 1 < p; ++i) A(i, i + 1) = Scalar(1);
  A.row(p - 1) = chi.transpose();
  return A;
}

namespace detail {

template <typename Scalar>
void pade_uv(const MatrixX<Scalar>& A, int m, MatrixX<Scalar>& U, MatrixX<Scalar>& V) {
  static const double b3[] = {120., 60., 12., 1.};
  static const double b5[] = {30240., 15120., 3360., 420., 30., 1.};
  static const double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static const double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                              2162160.,     110880.,      3960.,        90.,        1.};
  static const double b13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                               1187353796428800.,  129060195264000.,   10559470521600.,
                               670442572800.,      33522128640.,       1323241920.,
                               40840800.,          960960.,            16380.,
                               182.,               1.};
  const Eigen::Index n = A.rows();
  const MatrixX<Scalar> I = MatrixX<Scalar>::Identity(n, n);
  const MatrixX<Scalar> A2 = A * A;
  auto c = [](double v) { return static_cast<Scalar>(v); };
  if (m == 13) {
    const MatrixX<Scalar> A4 = A2 * A2;
    const MatrixX<Scalar> A6 = A4 * A2;
    const double* b = b13;
    const MatrixX<Scalar> Uin = c(b[13]) * A6 + c(b[11]) * A4 + c(b[9]) * A2;
    U = A * (A6 * Uin + c(b[7]) * A6 + c(b[5]) * A4 + c(b[3]) * A2 + c(b[1]) * I);
    const MatrixX<Scalar> Vin = c(b[12]) * A6 + c(b[10]) * A4 + c(b[8]) * A2;
    V = A6 * Vin + c(b[6]) * A6 + c(b[4]) * A4 + c(b[2]) * A2 + c(b[0]) * I;
    return;
  }
  const double* b = m == 3 ? b3 : m == 5 ? b5 : m == 7 ? b7 : b9;
  MatrixX<Scalar> Uo = c(b[1]) * I, Ve = c(b[0]) * I, P = I;
  for (int k = 2; k <= m; k += 2) {
    P = P * A2;
    Ve += c(b[k]) * P;
    Uo += c(b[k + 1]) * P;
  }
  U = A * Uo;
  V = Ve;
}

}  // namespace detail

/// exp(A t) by Pade scaling and squaring with degree selection on the 1-norm.
template <typename Derived>
MatrixX<typename Derived::Scalar> matrix_exp(const Eigen::MatrixBase<Derived>& A_in,
                                             typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  using std::ceil;
  using std::log2;
  if (A_in.rows() != A_in.cols()) throw std::invalid_argument("matrix_exp: matrix must be square");
  MatrixX<Scalar> A = A_in * t;
  const Eigen::Index n = A.rows();
  if (n == 0) return A;
  const Scalar norm = A.cwiseAbs().colwise().sum().maxCoeff();
  if (norm == Scalar(0)) return MatrixX<Scalar>::Identity(n, n);

  static const double theta[] = {1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                                 2.097847961257068e0};
  static const int degree[] = {3, 5, 7, 9};
  MatrixX<Scalar> U, V;
  int squarings = 0;
  int m = 13;
  for (int i = 0; i < 4; ++i) {
    if (norm <= static_cast<Scalar>(theta[i])) {
      m = degree[i];
      break;
    }
  }
  if (m == 13) {
    const Scalar ratio = norm / static_cast<Scalar>(5.371920351148152);
    if (ratio > Scalar(1)) squarings = static_cast<int>(ceil(log2(ratio)));
    A /= std::ldexp(Scalar(1), squarings);
  }
  detail::pade_uv(A, m, U, V);
  MatrixX<Scalar> E = (V - U).partialPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) E = E * E;
  return E;
}

}  // namespace isotrig
