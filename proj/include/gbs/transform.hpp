#pragma once

#include <optional>

#include "gbs/matq.hpp"

namespace gbs {

/// Parameters of the matrix-variate GBS law: degrees n, SPD shape Xi and SPD
/// scale beta (with its SPD square root Delta cached). Immutable once built.
class GbsParams {
 public:
  static GbsParams make(int n, const RealMatrix& xi, const RealMatrix& beta);
  /// beta = b * I_m.
  static GbsParams make_scalar(int n, const RealMatrix& xi, double b);

  int n() const { return n_; }
  int m() const { return static_cast<int>(xi_.rows()); }
  const RealMatrix& xi() const { return xi_; }
  const RealMatrix& beta() const { return beta_; }
  const RealMatrix& delta() const { return delta_; }
  const RealMatrix& xi_inv() const { return xi_inv_; }
  const RealMatrix& delta_inv() const { return delta_inv_; }
  double log_det_xi() const { return log_det_xi_; }
  double log_det_beta() const { return log_det_beta_; }
  /// True when beta is exactly a multiple of the identity.
  bool scalar_beta() const { return scalar_beta_; }

 private:
  int n_ = 1;
  RealMatrix xi_, beta_, delta_, xi_inv_, delta_inv_;
  double log_det_xi_ = 0, log_det_beta_ = 0;
  bool scalar_beta_ = false;
};

enum class SvVariant { First, Second };

/// ln|G(d)| and sign for the product G over eigenvalues d_i (the squared
/// singular values g_i^2 of V Delta^{-1}, or delta_i of beta^{-1} T).
struct GProduct {
  double log_abs = 0;
  int sign = 1;  // 0 when a factor vanishes
};

GProduct g_product(const RealVector& d, int n, SvVariant variant = SvVariant::First);

/// Z = (V Delta^{-1} - V'^+ Delta) Xi^{-1}.
RealMatrix forward_map(const RealMatrix& v, const GbsParams& params);

/// The preimage of Z with every singular value of V Delta^{-1} >= 1.
/// Z = 0 maps to [I_m; 0] Delta.
RealMatrix inverse_map_branch(const RealMatrix& z, const GbsParams& params);

/// Squared singular values of V Delta^{-1}, descending.
RealVector branch_coordinates(const RealMatrix& v, const GbsParams& params);

/// |Xi|^{-n} |det(Delta^{-1} x I + (Delta x I)(K (V'^+ x V^+) - (V'V)^{-1} x (I - V V^+)))|.
double jacobian_det_form(const RealMatrix& v, const GbsParams& params);

/// |Xi|^{-n} |beta|^{-n/2} |G(g^2)|. Rejects tied g_i^2 and g_i = 1.
double jacobian_sv_form(const RealMatrix& v, const GbsParams& params,
                        SvVariant variant = SvVariant::First);

/// |det d vec Z / d vec V'| by central differences of forward_map.
double jacobian_fd_oracle(const RealMatrix& v, const GbsParams& params, double step = 1e-5);

struct JacobianReport {
  double det_form = 0;
  double sv_form = 0;
  double sv_form_second = 0;
  std::optional<double> fd_form;
  double rel_disagreement = 0;
  int sign = 1;  // sign of the unsigned-away product G
};

JacobianReport jacobian_report(const RealMatrix& v, const GbsParams& params, bool with_fd = true,
                               double step = 1e-5);

}  // namespace gbs
