#include "gbs/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace gbs {

namespace {

constexpr double kTieTol = 1e-10;
constexpr double kBoundaryTol = 1e-12;

void require_full_rank(const RealMatrix& v, const GbsParams& params) {
  if (v.cols() != params.m()) throw Error(ErrorKind::DomainError, "V must have m columns");
  if (v.rows() != params.n()) throw Error(ErrorKind::DomainError, "V must have n rows");
  if (!v.allFinite()) throw Error(ErrorKind::DomainError, "V has non-finite entries");
}

}  // namespace

GbsParams GbsParams::make(int n, const RealMatrix& xi, const RealMatrix& beta) {
  if (xi.rows() != beta.rows() || xi.cols() != beta.cols()) {
    throw Error(ErrorKind::DomainError, "Xi and beta must both be m x m");
  }
  if (n < xi.rows()) throw Error(ErrorKind::DomainError, "degrees n must satisfy n >= m");
  require_spd(xi, "Xi");
  require_spd(beta, "beta");
  GbsParams p;
  p.n_ = n;
  p.xi_ = (xi + xi.transpose()) / 2;
  p.beta_ = (beta + beta.transpose()) / 2;
  p.delta_ = spd_sqrt(p.beta_);
  p.xi_inv_ = p.xi_.inverse();
  p.delta_inv_ = p.delta_.inverse();
  p.log_det_xi_ = std::log(p.xi_.determinant());
  p.log_det_beta_ = std::log(p.beta_.determinant());
  const auto m = p.beta_.rows();
  p.scalar_beta_ = p.beta_ == RealMatrix::Identity(m, m) * p.beta_(0, 0);
  return p;
}

GbsParams GbsParams::make_scalar(int n, const RealMatrix& xi, double b) {
  if (!(b > 0)) throw Error(ErrorKind::NotSpd, "scalar beta must be > 0");
  return make(n, xi, RealMatrix::Identity(xi.rows(), xi.rows()) * b);
}

GProduct g_product(const RealVector& d, int n, SvVariant variant) {
  const auto m = d.size();
  const int excess = n - static_cast<int>(m);
  GProduct g;
  auto accumulate = [&g](double factor) {
    if (factor == 0) {
      g.sign = 0;
      g.log_abs = -std::numeric_limits<double>::infinity();
      return;
    }
    if (factor < 0) g.sign = -g.sign;
    g.log_abs += std::log(std::abs(factor));
  };
  for (Eigen::Index i = 0; i < m; ++i) {
    const double di = d(i);
    if (variant == SvVariant::First) {
      for (int k = 0; k < excess; ++k) accumulate((di - 1) / di);
      accumulate(1 + 1 / di);
    } else {
      g.log_abs -= n * std::log(di);
      for (int k = 0; k < excess; ++k) accumulate(di - 1);
      accumulate(1 + di);
    }
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (variant == SvVariant::First) {
        accumulate(1 - 1 / (di * d(j)));
      } else {
        accumulate(di * d(j) - 1);
      }
    }
    if (g.sign == 0) break;
  }
  if (g.sign == 0) g.log_abs = -std::numeric_limits<double>::infinity();
  return g;
}

RealMatrix forward_map(const RealMatrix& v, const GbsParams& params) {
  require_full_rank(v, params);
  // V'^+ = (V^+)' = V (V'V)^{-1}.
  const RealMatrix v_pinv_t = pinv(v).transpose();
  return (v * params.delta_inv() - v_pinv_t * params.delta()) * params.xi_inv();
}

RealMatrix inverse_map_branch(const RealMatrix& z, const GbsParams& params) {
  const auto n = params.n();
  const auto m = params.m();
  if (z.rows() != n || z.cols() != m) throw Error(ErrorKind::DomainError, "Z must be n x m");
  if (!z.allFinite()) throw Error(ErrorKind::DomainError, "Z has non-finite entries");
  if (z.isZero(0)) {
    RealMatrix u = RealMatrix::Zero(n, m);
    u.topRows(m).setIdentity();
    return u * params.delta();
  }
  // Y = Z Xi = U - U'^+ with U = V Delta^{-1}; on the SVD Y = H D Q' the
  // branch picks l - 1/l = d with l >= 1 for each singular value.
  const RealMatrix y = z * params.xi();
  const auto f = svd_thin_unchecked(y);
  RealVector l(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double d = f.singulars(i);
    l(i) = (d + std::sqrt(d * d + 4)) / 2;
  }
  return f.left * l.asDiagonal() * f.right.transpose() * params.delta();
}

RealVector branch_coordinates(const RealMatrix& v, const GbsParams& params) {
  const RealMatrix u = v * params.delta_inv();
  return sym_eigenvalues(RealMatrix(u.transpose() * u));
}

namespace {

// Signed determinant of the bracketed nm x nm matrix.
double det_form_signed(const RealMatrix& v, const GbsParams& params) {
  require_full_rank(v, params);
  const auto n = params.n();
  const auto m = params.m();
  const RealMatrix v_pinv = pinv(v);
  const RealMatrix v_pinv_t = v_pinv.transpose();
  const RealMatrix in = RealMatrix::Identity(n, n);
  const RealMatrix vtv_inv = (v.transpose() * v).inverse();
  const RealMatrix proj = in - v * v_pinv;

  const RealMatrix inner =
      commutation(m, n) * kron(v_pinv_t, v_pinv) - kron(vtv_inv, proj);
  const RealMatrix full = kron(params.delta_inv(), in) + kron(params.delta(), in) * inner;
  return full.partialPivLu().determinant();
}

}  // namespace

double jacobian_det_form(const RealMatrix& v, const GbsParams& params) {
  const double det = det_form_signed(v, params);
  return std::exp(-params.n() * params.log_det_xi()) * std::abs(det);
}

double jacobian_sv_form(const RealMatrix& v, const GbsParams& params, SvVariant variant) {
  require_full_rank(v, params);
  const RealVector g2 = branch_coordinates(v, params);
  for (Eigen::Index i = 0; i < g2.size(); ++i) {
    if (std::abs(std::sqrt(g2(i)) - 1) < kBoundaryTol) {
      throw Error(ErrorKind::DegenerateEigenvalues, "singular value of V Delta^{-1} equals 1");
    }
    for (Eigen::Index j = i + 1; j < g2.size(); ++j) {
      if (std::abs(g2(i) - g2(j)) < kTieTol * std::max(g2(i), g2(j))) {
        throw Error(ErrorKind::DegenerateEigenvalues, "tied singular values of V Delta^{-1}");
      }
    }
  }
  const GProduct g = g_product(g2, params.n(), variant);
  return std::exp(g.log_abs - params.n() * params.log_det_xi() -
                  params.n() / 2.0 * params.log_det_beta());
}

double jacobian_fd_oracle(const RealMatrix& v, const GbsParams& params, double step) {
  require_full_rank(v, params);
  const auto dim = v.size();
  RealMatrix jac(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    RealMatrix plus = v, minus = v;
    plus.data()[k] += step;
    minus.data()[k] -= step;
    jac.col(k) = (vec(forward_map(plus, params)) - vec(forward_map(minus, params))) / (2 * step);
  }
  return std::abs(jac.partialPivLu().determinant());
}

JacobianReport jacobian_report(const RealMatrix& v, const GbsParams& params, bool with_fd,
                               double step) {
  JacobianReport rep;
  rep.det_form = jacobian_det_form(v, params);
  rep.sv_form = jacobian_sv_form(v, params, SvVariant::First);
  rep.sv_form_second = jacobian_sv_form(v, params, SvVariant::Second);
  rep.sign = g_product(branch_coordinates(v, params), params.n()).sign;
  std::vector<double> values{rep.det_form, rep.sv_form, rep.sv_form_second};
  if (with_fd) {
    rep.fd_form = jacobian_fd_oracle(v, params, step);
    values.push_back(*rep.fd_form);
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  rep.rel_disagreement = (*hi - *lo) / std::abs(*hi);
  return rep;
}

}  // namespace gbs
