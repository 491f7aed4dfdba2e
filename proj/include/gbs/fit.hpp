#pragma once

// Maximum likelihood for the matrix-variate Kotz-Birnbaum-Saunders model
// with scalar scale beta * I, the modified BIC*, evidence grades and s-grid
// profiling against the Gaussian baseline.

#include <cstdint>
#include <string>
#include <vector>

#include "gbs/density.hpp"
#include "gbs/sample.hpp"

namespace gbs {

/// Parameter point of the scalar-beta model. For the Gaussian family q, r
/// and s are ignored.
struct KbsParameters {
  KernelFamily family = KernelFamily::Gaussian;
  double beta = 1;
  RealMatrix xi;
  double q = 1, r = 0.5, s = 1;

  KernelSpec kernel(int n, int m) const;
};

struct LoglikResult {
  double value = 0;
  int outside_support = 0;  // observations with some eigenvalue below beta
};

/// Term-by-term log-likelihood of a batch of SPD matrices. Under
/// AsPublished, |G| is used where a factor turns negative; under
/// BranchNormalized, outside-support observations make the value -inf.
LoglikResult loglik(const KbsParameters& params, const SampleBatch& data, int n,
                    Convention convention = Convention::AsPublished);

struct InitGuess {
  double beta = 1;
  RealMatrix xi;
  double r = 0.5;
  double q = 1;
  std::vector<bool> alpha_fallback;  // per diagonal index
};

/// Moment-style starting point from arithmetic and harmonic means of the
/// diagonal entries.
InitGuess init_guess(const SampleBatch& data, int n);

struct FitOptions {
  int max_iterations = 5000;  // per start
  double tolerance = 1e-10;   // relative change in -loglik between simplex restarts
  int restarts = 5;           // init_guess plus restarts - 1 jittered copies
  std::uint64_t seed = 0;
  Convention convention = Convention::BranchNormalized;
};

struct FitSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double s = 1;  // fixed Kotz power
  FitOptions options;

  static FitSpec gaussian(FitOptions options = {});
  static FitSpec kotz(double s, FitOptions options = {});
};

struct FitResult {
  KbsParameters estimates;
  double loglik_max = 0;
  int n_params = 0;
  int sample_size = 0;
  double bic_star = 0;
  bool converged = false;
  int iterations = 0;
  std::uint64_t seed = 0;
  Convention convention = Convention::BranchNormalized;
};

int parameter_count(KernelFamily family, int m);

FitResult fit_mle(const SampleBatch& data, const FitSpec& spec, int n);

/// Maximizes again from a given point (used to confirm a reported optimum).
FitResult refit_from(const SampleBatch& data, const FitSpec& spec, int n,
                     const KbsParameters& start);

/// -2 loglik + n_p (ln(K + 2) - ln 24), K the sample size.
double bic_star(double loglik_max, int n_params, int sample_size);

enum class EvidenceGrade { Weak, Positive, Strong, VeryStrong };

/// [0,2) Weak, [2,6) Positive, [6,10) Strong, >= 10 VeryStrong.
EvidenceGrade evidence_grade(double diff);
std::string to_string(EvidenceGrade grade);

struct ProfileRow {
  double s = 0;
  FitResult kotz;
  double bic_diff = 0;  // BIC*_G - BIC*_K; positive favors the Kotz model
  EvidenceGrade grade = EvidenceGrade::Weak;
};

struct ProfileTable {
  int n = 0;
  FitResult gaussian;
  std::vector<ProfileRow> rows;
};

std::vector<double> default_s_grid();

/// Fits the Gaussian baseline once and one Kotz model per fixed s. Rows run
/// on up to `jobs` threads; results do not depend on `jobs`.
ProfileTable profile_s_grid(const SampleBatch& data, const std::vector<double>& s_values, int n,
                            FitOptions options = {}, int jobs = 1);

}  // namespace gbs
