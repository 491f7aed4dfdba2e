#pragma once

// Dense matrix kernels shared by the distribution code: thin SVD with a
// fixed sign convention, sorted symmetric eigendecomposition, SPD square
// roots, Moore-Penrose inverse, Kronecker and commutation matrices, and the
// log multivariate gamma function.
//
// All routines are deterministic functions of their input bits.

#include <Eigen/Dense>

#include <math.h>

#include <cmath>
#include <numbers>
#include <string>

#include "gbs/error.hpp"

namespace gbs {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RealMatrix = Mat<double>;
using RealVector = Vec<double>;

/// Relative rank threshold applied to singular values.
inline constexpr double kRankTol = 1e-12;
/// Relative symmetry tolerance for symmetric/SPD inputs.
inline constexpr double kSymTol = 1e-12;

template <typename Scalar>
struct SvdFactors {
  Mat<Scalar> left;       // n x m, orthonormal columns
  Vec<Scalar> singulars;  // m, descending
  Mat<Scalar> right;      // m x m, orthogonal
};

template <typename Scalar>
struct SymEig {
  Vec<Scalar> values;   // descending
  Mat<Scalar> vectors;  // columns match values
};

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& s, double tol = kSymTol) {
  if (s.rows() != s.cols()) return false;
  const auto scale = s.cwiseAbs().maxCoeff();
  if (scale == 0) return true;
  return (s - s.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Thin SVD without the rank check. Signs are fixed so that the
/// largest-magnitude entry of every left singular vector is positive.
template <typename Derived>
SvdFactors<typename Derived::Scalar> svd_thin_unchecked(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() < a.cols()) {
    throw Error(ErrorKind::DomainError, "svd_thin needs rows >= cols");
  }
  Eigen::JacobiSVD<Mat<Scalar>> svd(a.eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors<Scalar> f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index j = 0; j < f.left.cols(); ++j) {
    Eigen::Index imax = 0;
    f.left.col(j).cwiseAbs().maxCoeff(&imax);
    if (f.left(imax, j) < 0) {
      f.left.col(j) *= -1;
      f.right.col(j) *= -1;
    }
  }
  return f;
}

/// Thin SVD of a full-column-rank n x m matrix (n >= m).
template <typename Derived>
SvdFactors<typename Derived::Scalar> svd_thin(const Eigen::MatrixBase<Derived>& a) {
  auto f = svd_thin_unchecked(a);
  const auto m = f.singulars.size();
  if (m == 0 || !(f.singulars(m - 1) > kRankTol * f.singulars(0))) {
    throw Error(ErrorKind::RankDeficient, "smallest singular value below threshold");
  }
  return f;
}

template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(s)) {
    throw Error(ErrorKind::NotSymmetric, "input matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s.eval());
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::DomainError, "eigensolver failed");
  }
  // Eigen sorts ascending.
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

/// Eigenvalues only, descending. Symmetrizes the input first, so it is meant
/// for matrices that are symmetric up to rounding (congruences, products).
template <typename Derived>
Vec<typename Derived::Scalar> sym_eigenvalues(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> sym = (s + s.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

template <typename Derived>
void require_spd(const Eigen::MatrixBase<Derived>& b, const char* what = "matrix") {
  if (!b.allFinite()) throw Error(ErrorKind::NotSpd, std::string(what) + " has non-finite entries");
  if (!is_symmetric(b)) throw Error(ErrorKind::NotSpd, std::string(what) + " is not symmetric");
  const auto values = sym_eig(b).values;
  if (!(values(values.size() - 1) > 0)) {
    throw Error(ErrorKind::NotSpd, std::string(what) + " is not positive definite");
  }
}

template <typename Derived>
Mat<typename Derived::Scalar> spd_sqrt(const Eigen::MatrixBase<Derived>& b) {
  if (!is_symmetric(b)) throw Error(ErrorKind::NotSpd, "spd_sqrt input is not symmetric");
  const auto e = sym_eig(b);
  if (!(e.values.minCoeff() > 0)) throw Error(ErrorKind::NotSpd, "spd_sqrt input is not positive definite");
  Mat<typename Derived::Scalar> r =
      e.vectors * e.values.cwiseSqrt().asDiagonal() * e.vectors.transpose();
  return (r + r.transpose()) / 2;
}

/// Moore-Penrose inverse of a full-column-rank matrix, (A'A)^{-1}A'.
template <typename Derived>
Mat<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& a) {
  const auto f = svd_thin(a);
  return f.right * f.singulars.cwiseInverse().asDiagonal() * f.left.transpose();
}

template <typename DA, typename DB>
Mat<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  Mat<typename DA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// K_{nm}: the nm x nm permutation with K vec(A) = vec(A') for A n x m.
template <typename Scalar = double>
Mat<Scalar> commutation(Eigen::Index n, Eigen::Index m) {
  Mat<Scalar> k = Mat<Scalar>::Zero(n * m, n * m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) k(j + i * m, i + j * n) = 1;
  }
  return k;
}

/// Column-stacking vec().
template <typename Derived>
Vec<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& a) {
  Mat<typename Derived::Scalar> tmp = a;
  return Eigen::Map<const Vec<typename Derived::Scalar>>(tmp.data(), tmp.size());
}

/// ln|Gamma(x)| without touching the global signgam where the C library
/// offers a reentrant variant.
inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

/// ln Gamma_m(a) = m(m-1)/4 ln(pi) + sum_{i=1..m} ln Gamma(a - (i-1)/2).
inline double log_mv_gamma(int m, double a) {
  if (m < 1) throw Error(ErrorKind::DomainError, "log_mv_gamma needs m >= 1");
  if (!(a > (m - 1) / 2.0)) {
    throw Error(ErrorKind::DomainError, "log_mv_gamma needs a > (m-1)/2");
  }
  double out = m * (m - 1) / 4.0 * std::log(std::numbers::pi);
  for (int i = 1; i <= m; ++i) out += log_gamma(a - (i - 1) / 2.0);
  return out;
}

}  // namespace gbs
