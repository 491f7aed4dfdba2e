#include "gbs/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace gbs {

namespace {

constexpr double kLn2 = std::numbers::ln2;
const double kLnPi = std::log(std::numbers::pi);

void require_positive(double x, const char* what) {
  if (!(x > 0) || !std::isfinite(x)) {
    throw Error(ErrorKind::DomainError, std::string(what) + " must be finite and > 0");
  }
}

// Rounding can push a nonnegative trace slightly below zero near delta = 1.
double clamp_trace(double u) { return u < 0 ? 0.0 : u; }

double log_det_spd(const RealMatrix& a) {
  Eigen::LLT<RealMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotSpd, "matrix is not positive definite");
  return 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

bool all_at_least_one(const RealVector& d) { return (d.array() >= 1.0).all(); }

// Eigenvalues within rounding of the branch boundary are snapped onto it so
// that vanishing factors of G vanish exactly.
RealVector snap_unit(RealVector d) {
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (std::abs(d(i) - 1) <= 1e-12) d(i) = 1;
  }
  return d;
}

// Shared tail of every T-type density:
//   (nm/2) ln pi + ln|G| - m ln 2 - ln Gamma_m(n/2) - (n/2) ln|beta| - n ln|Xi|
//   + det_term + ln h(u), plus m ln 2 on the branch.
DensityEval assemble_t_type(RealVector d, double det_term, double u, const GbsParams& params,
                            const KernelSpec& kernel, Convention convention) {
  const int n = params.n();
  const int m = params.m();
  const auto k = kernel.with_dims(n, m);
  DensityEval out;
  out.delta = snap_unit(std::move(d));
  out.in_branch = all_at_least_one(out.delta);
  if (convention == Convention::BranchNormalized && !out.in_branch) {
    throw Error(ErrorKind::OutsideSupport, "some eigenvalue of beta^{-1} T is below 1");
  }
  const GProduct g = g_product(out.delta, n);
  out.sign = g.sign;
  double base = -m * kLn2 - log_mv_gamma(m, n / 2.0) - n / 2.0 * params.log_det_beta() -
                n * params.log_det_xi() + det_term;
  if (k.family == KernelFamily::Gaussian) {
    // pi^{nm/2} (2 pi)^{-nm/2} collapses to 2^{-nm/2}.
    base += -n * m / 2.0 * kLn2 - u / 2;
  } else {
    base += n * m / 2.0 * kLnPi + log_h(k, u);
  }
  out.log_density = g.log_abs + base;
  if (convention == Convention::BranchNormalized) out.log_density += m * kLn2;
  return out;
}

}  // namespace

double logpdf_uni_gbs(double t, double alpha, double beta, const KernelSpec& kernel) {
  require_positive(t, "t");
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  const auto k = kernel.with_dims(1, 1);
  const double u = (t / beta + beta / t - 2) / (alpha * alpha);
  if (std::isinf(u)) return -std::numeric_limits<double>::infinity();
  return -1.5 * std::log(t) + std::log(t + beta) - std::log(2 * alpha * std::sqrt(beta)) +
         log_h(k, clamp_trace(u));
}

double logpdf_sqrt_gbs(double v, double alpha, double beta, const KernelSpec& kernel) {
  require_positive(v, "v");
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  const auto k = kernel.with_dims(1, 1);
  const double v2 = v * v;
  const double u = (v2 / beta + beta / v2 - 2) / (alpha * alpha);
  if (std::isinf(u)) return -std::numeric_limits<double>::infinity();
  return std::log1p(beta / v2) - std::log(alpha * std::sqrt(beta)) + log_h(k, clamp_trace(u));
}

double logpdf_elementwise(const RealMatrix& t, const ElementwiseParams& params,
                          const KernelSpec& kernel) {
  if (params.alpha.rows() != t.rows() || params.alpha.cols() != t.cols() ||
      params.beta.rows() != t.rows() || params.beta.cols() != t.cols()) {
    throw Error(ErrorKind::DomainError, "element-wise parameters must match T's shape");
  }
  const auto k = kernel.with_dims(static_cast<int>(t.rows()), static_cast<int>(t.cols()));
  double log_scale = 0;
  double u = 0;
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      const double tij = t(i, j), a = params.alpha(i, j), b = params.beta(i, j);
      require_positive(tij, "t_ij");
      require_positive(a, "alpha_ij");
      require_positive(b, "beta_ij");
      log_scale += -1.5 * std::log(tij) + std::log(tij + b) - std::log(2 * a * std::sqrt(b));
      u += (tij / b + b / tij - 2) / (a * a);
    }
  }
  return log_scale + log_h(k, clamp_trace(u));
}

double h_argument(const RealMatrix& t, const GbsParams& params) {
  const auto m = params.m();
  const RealMatrix xi_inv2 = params.xi_inv() * params.xi_inv();
  const RealMatrix a = params.delta_inv() * t * params.delta_inv() +
                       params.delta() * t.inverse() * params.delta() -
                       2 * RealMatrix::Identity(m, m);
  return clamp_trace((xi_inv2 * a).trace());
}

double logpdf_V(const RealMatrix& v, const GbsParams& params, const KernelSpec& kernel,
                Convention convention) {
  if (v.rows() != params.n() || v.cols() != params.m()) {
    throw Error(ErrorKind::DomainError, "V must be n x m");
  }
  const RealMatrix vtv = v.transpose() * v;
  // Rank check through the SVD so a rank-deficient V reports RankDeficient.
  svd_thin(v);
  const RealVector g2 = snap_unit(branch_coordinates(v, params));
  if (convention == Convention::BranchNormalized && !all_at_least_one(g2)) {
    throw Error(ErrorKind::OutsideSupport, "V lies outside the branch region");
  }
  const GProduct g = g_product(g2, params.n());
  const double log_jac = g.log_abs - params.n() * params.log_det_xi() -
                         params.n() / 2.0 * params.log_det_beta();
  const auto k = kernel.with_dims(params.n(), params.m());
  return log_jac + log_h(k, h_argument(vtv, params));
}

DensityEval evaluate_T(const RealMatrix& t, const GbsParams& params, const KernelSpec& kernel,
                       Convention convention) {
  const int n = params.n();
  const int m = params.m();
  if (t.rows() != m || t.cols() != m) throw Error(ErrorKind::DomainError, "T must be m x m");
  require_spd(t, "T");
  RealVector d;
  double log_det_t = 0;
  if (params.scalar_beta()) {
    // beta = b I: delta_i = lambda_i(T) / b.
    const RealVector lambda = sym_eig(t).values;
    d = lambda / params.beta()(0, 0);
    log_det_t = lambda.array().log().sum();
  } else {
    d = sym_eigenvalues(RealMatrix(params.delta_inv() * t * params.delta_inv()));
    log_det_t = log_det_spd(t);
  }
  return assemble_t_type(std::move(d), (n - m - 1) / 2.0 * log_det_t, h_argument(t, params),
                         params, kernel, convention);
}

double logpdf_T(const RealMatrix& t, const GbsParams& params, const KernelSpec& kernel,
                Convention convention) {
  return evaluate_T(t, params, kernel, convention).log_density;
}

double logpdf_T_inverse(const RealMatrix& s, const GbsParams& params, const KernelSpec& kernel,
                        Convention convention) {
  const int n = params.n();
  const int m = params.m();
  if (s.rows() != m || s.cols() != m) throw Error(ErrorKind::DomainError, "S must be m x m");
  require_spd(s, "S");
  // rho_i = ch_i(beta^{-1} S^{-1}) = 1 / ch_i(Delta S Delta).
  const RealVector mu = sym_eigenvalues(RealMatrix(params.delta() * s * params.delta()));
  RealVector rho = mu.cwiseInverse().reverse();
  const RealMatrix xi_inv2 = params.xi_inv() * params.xi_inv();
  const RealMatrix s_inv = s.inverse();
  const RealMatrix a = params.delta_inv() * s_inv * params.delta_inv() +
                       params.delta() * s * params.delta() - 2 * RealMatrix::Identity(m, m);
  const double u = clamp_trace((xi_inv2 * a).trace());
  const double det_term = -(n + m + 1) / 2.0 * log_det_spd(s);
  return assemble_t_type(std::move(rho), det_term, u, params, kernel, convention).log_density;
}

double logpdf_T_congruence(const RealMatrix& y, const RealMatrix& c, const GbsParams& params,
                           const KernelSpec& kernel, Convention convention) {
  const int n = params.n();
  const int m = params.m();
  if (y.rows() != m || y.cols() != m || c.rows() != m || c.cols() != m) {
    throw Error(ErrorKind::DomainError, "Y and C must be m x m");
  }
  require_spd(y, "Y");
  const auto c_lu = c.fullPivLu();
  if (!c_lu.isInvertible()) throw Error(ErrorKind::SingularC, "C is singular");
  const double log_abs_det_c = std::log(std::abs(c_lu.determinant()));

  // theta_i = ch_i((C' beta C)^{-1} Y) from the generalized problem Y x = theta (C' beta C) x.
  RealMatrix cbc = c.transpose() * params.beta() * c;
  cbc = (cbc + cbc.transpose()) / 2;
  Eigen::GeneralizedSelfAdjointEigenSolver<RealMatrix> ges(y, cbc, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) throw Error(ErrorKind::DomainError, "generalized eigensolver failed");
  RealVector theta = ges.eigenvalues().reverse();

  const RealMatrix dc = params.delta() * c;
  const RealMatrix dc_inv = dc.inverse();
  const RealMatrix xi_inv2 = params.xi_inv() * params.xi_inv();
  const RealMatrix a = dc_inv.transpose() * y * dc_inv + dc * y.inverse() * dc.transpose() -
                       2 * RealMatrix::Identity(m, m);
  const double u = clamp_trace((xi_inv2 * a).trace());
  const double det_term = (n - m - 1) / 2.0 * log_det_spd(y) - n * log_abs_det_c;
  return assemble_t_type(std::move(theta), det_term, u, params, kernel, convention).log_density;
}

}  // namespace gbs
