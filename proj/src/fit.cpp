#include "gbs/fit.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <numbers>
#include <thread>

namespace gbs {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPenalty = 1e100;
constexpr double kBarrier = 1 - 1e-6;
// Simplex size (in the unconstrained coordinates) below which one restart ends;
// smaller sizes stall on rounding of -loglik.
constexpr double kSimplexSize = 1e-6;

// Per-observation quantities that do not depend on the parameters.
struct Observation {
  RealMatrix t;
  RealMatrix t_inv;
  RealVector lambda;  // descending
  double log_det = 0;
};

struct LoglikData {
  int m = 0;
  std::vector<Observation> obs;
  double min_lambda = std::numeric_limits<double>::infinity();

  explicit LoglikData(const SampleBatch& batch) : m(batch.m) {
    batch.validate();
    obs.reserve(batch.count());
    for (const auto& t : batch.matrices) {
      Observation o;
      o.t = (t + t.transpose()) / 2;
      o.t_inv = o.t.inverse();
      o.lambda = sym_eig(o.t).values;
      o.log_det = o.lambda.array().log().sum();
      min_lambda = std::min(min_lambda, o.lambda(o.lambda.size() - 1));
      obs.push_back(std::move(o));
    }
  }
};

LoglikResult evaluate(const LoglikData& data, const KbsParameters& p, int n,
                      Convention convention) {
  const int m = data.m;
  const double big_k = static_cast<double>(data.obs.size());
  if (!(p.beta > 0) || !std::isfinite(p.beta)) throw Error(ErrorKind::DomainError, "beta must be > 0");
  if (p.xi.rows() != m || p.xi.cols() != m) throw Error(ErrorKind::DomainError, "Xi must be m x m");
  if (n < m) throw Error(ErrorKind::DomainError, "degrees n must satisfy n >= m");
  require_spd(p.xi, "Xi");
  const auto kernel = p.kernel(n, m);

  const RealMatrix xi_inv = p.xi.inverse();
  const RealMatrix xi_inv2 = xi_inv * xi_inv;
  const double tr_xi_inv2 = xi_inv2.trace();
  const double b = p.beta;

  LoglikResult res;
  double g_sum = 0;
  double log_det_sum = 0;
  double kernel_sum = 0;
  bool zero_factor = false;
  for (const auto& o : data.obs) {
    bool outside = false;
    for (int i = 0; i < m; ++i) {
      const double ratio = b / o.lambda(i);
      if (ratio > 1) outside = true;
      const double f1 = 1 - ratio;
      if (f1 == 0 && n > m) zero_factor = true;
      if (n > m) g_sum += (n - m) * std::log(std::abs(f1));
      g_sum += std::log1p(ratio);
      for (int j = i + 1; j < m; ++j) {
        const double f2 = 1 - b * b / (o.lambda(i) * o.lambda(j));
        if (f2 == 0) zero_factor = true;
        g_sum += std::log(std::abs(f2));
      }
    }
    if (outside) ++res.outside_support;
    log_det_sum += o.log_det;

    // tr Xi^{-2} (T / beta + beta T^{-1} - 2 I)
    const double u = std::max(0.0, (xi_inv2.cwiseProduct(o.t)).sum() / b +
                                       b * (xi_inv2.cwiseProduct(o.t_inv)).sum() - 2 * tr_xi_inv2);
    if (kernel.family == KernelFamily::Gaussian) {
      kernel_sum += -u / 2;
    } else if (u == 0 && kernel.q != 1) {
      if (kernel.q < 1) throw Error(ErrorKind::Singular, "Kotz kernel unbounded at u = 0");
      zero_factor = true;
    } else {
      kernel_sum += (kernel.q == 1 ? 0.0 : (kernel.q - 1) * std::log(u)) -
                    kernel.r * std::pow(u, kernel.s);
    }
  }

  double constant = -big_k * m * kLn2 - big_k * log_mv_gamma(m, n / 2.0) -
                    big_k * n * m / 2.0 * std::log(b) -
                    big_k * n * std::log(p.xi.determinant()) + (n - m - 1) / 2.0 * log_det_sum;
  if (kernel.family == KernelFamily::Gaussian) {
    constant += -big_k * n * m / 2.0 * kLn2;
  } else {
    const double shape = kernel.radial_shape();
    constant += big_k * std::log(kernel.s) + big_k * shape * std::log(kernel.r) +
                big_k * log_gamma(n * m / 2.0) - big_k * log_gamma(shape);
  }

  res.value = constant + g_sum + kernel_sum;
  if (zero_factor) res.value = kNegInf;
  if (convention == Convention::BranchNormalized) {
    res.value = res.outside_support > 0 ? kNegInf : res.value + big_k * m * kLn2;
  }
  return res;
}

// Unconstrained coordinates: logit(beta / beta_max), lower Cholesky factor of
// Xi with logged diagonal, then ln r and ln(q - (2 - mn)/2) for Kotz.
struct Reparam {
  int m = 0;
  int n = 0;
  KernelFamily family = KernelFamily::Gaussian;
  double s = 1;
  double beta_max = 1;

  double q_min() const { return (2.0 - n * m) / 2.0; }
  int size() const { return 1 + m * (m + 1) / 2 + (family == KernelFamily::Kotz ? 2 : 0); }

  KbsParameters decode(const RealVector& x) const {
    KbsParameters p;
    p.family = family;
    p.s = s;
    p.beta = beta_max / (1 + std::exp(-x(0)));
    RealMatrix l = RealMatrix::Zero(m, m);
    int idx = 1;
    for (int j = 0; j < m; ++j) {
      for (int i = j; i < m; ++i) l(i, j) = i == j ? std::exp(x(idx++)) : x(idx++);
    }
    p.xi = l * l.transpose();
    if (family == KernelFamily::Kotz) {
      p.r = std::exp(x(idx++));
      p.q = q_min() + std::exp(x(idx++));
    }
    return p;
  }

  RealVector encode(const KbsParameters& p) const {
    RealVector x(size());
    double ratio = p.beta / beta_max;
    if (!(ratio > 0 && ratio < 1)) ratio = 0.5;
    ratio = std::clamp(ratio, 1e-8, 1 - 1e-8);
    x(0) = std::log(ratio / (1 - ratio));
    Eigen::LLT<RealMatrix> llt(p.xi);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotSpd, "starting Xi is not SPD");
    const RealMatrix l = llt.matrixL();
    int idx = 1;
    for (int j = 0; j < m; ++j) {
      for (int i = j; i < m; ++i) x(idx++) = i == j ? std::log(l(i, j)) : l(i, j);
    }
    if (family == KernelFamily::Kotz) {
      x(idx++) = std::log(p.r);
      x(idx++) = std::log(std::max(p.q - q_min(), 1e-8));
    }
    return x;
  }
};

struct ObjectiveContext {
  const LoglikData* data;
  const Reparam* reparam;
  Convention convention;
};

double objective(const gsl_vector* x, void* raw) {
  const auto* ctx = static_cast<const ObjectiveContext*>(raw);
  RealVector theta(ctx->reparam->size());
  for (int i = 0; i < theta.size(); ++i) theta(i) = gsl_vector_get(x, i);
  try {
    const double ll =
        evaluate(*ctx->data, ctx->reparam->decode(theta), ctx->reparam->n, ctx->convention).value;
    return std::isfinite(ll) ? -ll : kPenalty;
  } catch (const Error&) {
    return kPenalty;
  }
}

struct SimplexRun {
  RealVector theta;
  double f = kPenalty;
  int iterations = 0;
  bool converged = false;
};

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

// Nelder-Mead with restarts from the incumbent until -loglik changes by less
// than the relative tolerance between consecutive restarts.
SimplexRun run_simplex(const ObjectiveContext& ctx, const RealVector& theta0,
                       const FitOptions& options) {
  const auto dim = static_cast<size_t>(theta0.size());
  gsl_multimin_function fn{&objective, dim, const_cast<ObjectiveContext*>(&ctx)};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> minimizer(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim));
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(dim));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(dim));

  SimplexRun run;
  run.theta = theta0;
  double f_prev = std::numeric_limits<double>::infinity();
  double step_size = 0.5;
  while (run.iterations < options.max_iterations) {
    for (size_t i = 0; i < dim; ++i) gsl_vector_set(x.get(), i, run.theta(i));
    gsl_vector_set_all(step.get(), step_size);
    gsl_multimin_fminimizer_set(minimizer.get(), &fn, x.get(), step.get());
    while (run.iterations < options.max_iterations) {
      const int status = gsl_multimin_fminimizer_iterate(minimizer.get());
      ++run.iterations;
      if (status != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(minimizer.get()), kSimplexSize) ==
          GSL_SUCCESS) {
        break;
      }
    }
    const double f = gsl_multimin_fminimizer_minimum(minimizer.get());
    const gsl_vector* best = gsl_multimin_fminimizer_x(minimizer.get());
    if (f <= run.f) {
      run.f = f;
      for (size_t i = 0; i < dim; ++i) run.theta(i) = gsl_vector_get(best, i);
    }
    if (std::abs(f_prev - run.f) <= options.tolerance * (std::abs(run.f) + options.tolerance)) {
      run.converged = run.f < kPenalty;
      break;
    }
    f_prev = run.f;
    step_size = 0.1;
  }
  return run;
}

Reparam make_reparam(const LoglikData& data, const FitSpec& spec, int n) {
  Reparam rp;
  rp.m = data.m;
  rp.n = n;
  rp.family = spec.family;
  rp.s = spec.s;
  rp.beta_max = kBarrier * data.min_lambda;
  return rp;
}

FitResult finish(const LoglikData& data, const FitSpec& spec, int n, const Reparam& rp,
                 const SimplexRun& run) {
  FitResult res;
  res.estimates = rp.decode(run.theta);
  res.loglik_max = evaluate(data, res.estimates, n, spec.options.convention).value;
  res.n_params = parameter_count(spec.family, data.m);
  res.sample_size = static_cast<int>(data.obs.size());
  res.bic_star = bic_star(res.loglik_max, res.n_params, res.sample_size);
  res.converged = run.converged;
  res.iterations = run.iterations;
  res.seed = spec.options.seed;
  res.convention = spec.options.convention;
  return res;
}

void require_fit_input(const SampleBatch& data, const FitSpec& spec, int n) {
  if (data.count() < 2) throw Error(ErrorKind::DomainError, "fitting needs at least 2 observations");
  if (n < data.m) throw Error(ErrorKind::DomainError, "degrees n must satisfy n >= m");
  if (spec.family == KernelFamily::Kotz && !(spec.s > 0)) {
    throw Error(ErrorKind::DomainError, "Kotz s must be > 0");
  }
}

}  // namespace

KernelSpec KbsParameters::kernel(int n, int m) const {
  if (family == KernelFamily::Gaussian) return KernelSpec::gaussian(n, m);
  return KernelSpec::kotz(q, r, s, n, m);
}

LoglikResult loglik(const KbsParameters& params, const SampleBatch& data, int n,
                    Convention convention) {
  return evaluate(LoglikData(data), params, n, convention);
}

InitGuess init_guess(const SampleBatch& data, int n) {
  (void)n;  // the moment seeds do not use the degrees
  data.validate();
  const int m = data.m;
  const auto big_k = static_cast<double>(data.count());
  if (data.count() < 2) throw Error(ErrorKind::DomainError, "init_guess needs at least 2 observations");

  InitGuess g;
  g.alpha_fallback.assign(m, false);
  RealVector alpha(m);
  double log_beta_sum = 0;
  for (int i = 0; i < m; ++i) {
    double sum = 0, inv_sum = 0;
    for (const auto& t : data.matrices) {
      if (!(t(i, i) > 0)) throw Error(ErrorKind::DomainError, "diagonal entries must be positive");
      sum += t(i, i);
      inv_sum += 1 / t(i, i);
    }
    const double arith = sum / big_k;
    const double harm = big_k / inv_sum;
    const double ratio = arith / harm;
    if (ratio <= 1 + 1e-12) {
      alpha(i) = 0.5;
      g.alpha_fallback[i] = true;
    } else {
      alpha(i) = std::sqrt(2 * (std::sqrt(ratio) - 1));
    }
    log_beta_sum += 0.5 * std::log(arith * harm);
  }
  g.beta = std::exp(log_beta_sum / m);

  RealMatrix xi = alpha.asDiagonal();
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      double rho = 0;
      for (const auto& t : data.matrices) rho += t(i, j) / std::sqrt(t(i, i) * t(j, j));
      rho /= big_k;
      xi(i, j) = xi(j, i) = rho * std::sqrt(alpha(i) * alpha(j));
    }
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(xi);
  const RealVector floored = es.eigenvalues().cwiseMax(1e-3);
  g.xi = es.eigenvectors() * floored.asDiagonal() * es.eigenvectors().transpose();
  g.xi = (g.xi + g.xi.transpose()) / 2;
  return g;
}

FitSpec FitSpec::gaussian(FitOptions options) {
  FitSpec f;
  f.family = KernelFamily::Gaussian;
  f.options = options;
  return f;
}

FitSpec FitSpec::kotz(double s, FitOptions options) {
  FitSpec f;
  f.family = KernelFamily::Kotz;
  f.s = s;
  f.options = options;
  return f;
}

int parameter_count(KernelFamily family, int m) {
  return 1 + m * (m + 1) / 2 + (family == KernelFamily::Kotz ? 2 : 0);
}

FitResult fit_mle(const SampleBatch& data, const FitSpec& spec, int n) {
  require_fit_input(data, spec, n);
  const LoglikData prepared(data);
  const Reparam rp = make_reparam(prepared, spec, n);
  const ObjectiveContext ctx{&prepared, &rp, spec.options.convention};

  const InitGuess guess = init_guess(data, n);
  KbsParameters start;
  start.family = spec.family;
  start.s = spec.s;
  start.beta = guess.beta;
  start.xi = guess.xi;
  start.r = guess.r;
  start.q = guess.q;
  const RealVector theta0 = rp.encode(start);

  const RngState root(spec.options.seed);
  SimplexRun best;
  for (int k = 0; k < std::max(1, spec.options.restarts); ++k) {
    RealVector theta = theta0;
    if (k > 0) {
      RngState rng = root.split(static_cast<std::uint64_t>(k));
      for (int i = 0; i < theta.size(); ++i) theta(i) += 0.5 * rng.normal();
    }
    SimplexRun run = run_simplex(ctx, theta, spec.options);
    if (k == 0 || run.f < best.f) best = std::move(run);
  }
  return finish(prepared, spec, n, rp, best);
}

FitResult refit_from(const SampleBatch& data, const FitSpec& spec, int n,
                     const KbsParameters& start) {
  require_fit_input(data, spec, n);
  const LoglikData prepared(data);
  const Reparam rp = make_reparam(prepared, spec, n);
  const ObjectiveContext ctx{&prepared, &rp, spec.options.convention};
  KbsParameters p = start;
  p.family = spec.family;
  p.s = spec.s;
  return finish(prepared, spec, n, rp, run_simplex(ctx, rp.encode(p), spec.options));
}

double bic_star(double loglik_max, int n_params, int sample_size) {
  if (sample_size < 1) throw Error(ErrorKind::DomainError, "sample size must be >= 1");
  return -2 * loglik_max + n_params * (std::log(sample_size + 2.0) - std::log(24.0));
}

EvidenceGrade evidence_grade(double diff) {
  if (!(diff >= 0)) throw Error(ErrorKind::NegativeDiff, "BIC* difference must be >= 0");
  if (diff < 2) return EvidenceGrade::Weak;
  if (diff < 6) return EvidenceGrade::Positive;
  if (diff < 10) return EvidenceGrade::Strong;
  return EvidenceGrade::VeryStrong;
}

std::string to_string(EvidenceGrade grade) {
  switch (grade) {
    case EvidenceGrade::Weak: return "Weak";
    case EvidenceGrade::Positive: return "Positive";
    case EvidenceGrade::Strong: return "Strong";
    case EvidenceGrade::VeryStrong: return "Very strong";
  }
  return "Unknown";
}

std::vector<double> default_s_grid() { return {0.5, 0.75, 1, 1.25, 1.5, 1.75, 2, 3, 4, 5}; }

ProfileTable profile_s_grid(const SampleBatch& data, const std::vector<double>& s_values, int n,
                            FitOptions options, int jobs) {
  for (double s : s_values) {
    if (!(s > 0)) throw Error(ErrorKind::DomainError, "s-grid values must be > 0");
  }
  ProfileTable table;
  table.n = n;
  table.gaussian = fit_mle(data, FitSpec::gaussian(options), n);
  table.rows.resize(s_values.size());

  std::vector<std::exception_ptr> failures(s_values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < s_values.size(); i = next++) {
      try {
        ProfileRow row;
        row.s = s_values[i];
        row.kotz = fit_mle(data, FitSpec::kotz(s_values[i], options), n);
        row.bic_diff = table.gaussian.bic_star - row.kotz.bic_star;
        row.grade = evidence_grade(std::abs(row.bic_diff));
        table.rows[i] = std::move(row);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, s_values.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return table;
}

}  // namespace gbs
