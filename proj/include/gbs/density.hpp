#pragma once

// Log densities of the Birnbaum-Saunders family: the univariate GBS law and
// its square-root variant, the element-wise matrix law, and the
// matrix-transformation laws of V (n x m) and T = V'V (m x m SPD), together
// with the laws of T^{-1} and C'TC.
//
// Kernels are passed by family and shape; ambient dimensions are taken from
// the object being evaluated (1 x 1 for the scalar laws, n x m otherwise).

#include "gbs/elliptic.hpp"
#include "gbs/transform.hpp"

namespace gbs {

/// AsPublished evaluates the closed forms verbatim on their whole domain.
/// BranchNormalized restricts to the branch region (all delta_i >= 1) where
/// the V <-> Z map is one-to-one. There the T-type densities carry an extra
/// factor 2^m and the V density is unchanged.
enum class Convention { AsPublished, BranchNormalized };

struct ElementwiseParams {
  RealMatrix alpha;  // n x m, entries > 0
  RealMatrix beta;   // n x m, entries > 0
};

double logpdf_uni_gbs(double t, double alpha, double beta, const KernelSpec& kernel);
double logpdf_sqrt_gbs(double v, double alpha, double beta, const KernelSpec& kernel);
double logpdf_elementwise(const RealMatrix& t, const ElementwiseParams& params,
                          const KernelSpec& kernel);

/// tr Xi^{-2} (Delta^{-1} T Delta^{-1} + Delta T^{-1} Delta - 2 I), i.e. tr Z'Z.
double h_argument(const RealMatrix& t, const GbsParams& params);

double logpdf_V(const RealMatrix& v, const GbsParams& params, const KernelSpec& kernel,
                Convention convention = Convention::AsPublished);

struct DensityEval {
  double log_density = 0;  // log of |density|
  int sign = 1;            // sign of G; negative only under AsPublished
  bool in_branch = true;   // all delta_i >= 1
  RealVector delta;        // eigenvalues of beta^{-1} T, descending
};

/// Full evaluation of the T density. Uses the scalar-beta eigenvalue path
/// when beta = b I and the closed Gaussian constant for the Gaussian kernel.
DensityEval evaluate_T(const RealMatrix& t, const GbsParams& params, const KernelSpec& kernel,
                       Convention convention = Convention::AsPublished);

double logpdf_T(const RealMatrix& t, const GbsParams& params, const KernelSpec& kernel,
                Convention convention = Convention::AsPublished);

/// Density of S = T^{-1}, evaluated from its own closed form.
double logpdf_T_inverse(const RealMatrix& s, const GbsParams& params, const KernelSpec& kernel,
                        Convention convention = Convention::AsPublished);

/// Density of Y = C'TC for invertible C, evaluated from its own closed form.
double logpdf_T_congruence(const RealMatrix& y, const RealMatrix& c, const GbsParams& params,
                           const KernelSpec& kernel,
                           Convention convention = Convention::AsPublished);

}  // namespace gbs
