#include "gbs/validate.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "gbs/density.hpp"
#include "gbs/fit.hpp"
#include "gbs/sample.hpp"
#include "json.hpp"

namespace gbs {

namespace {

RealMatrix random_matrix(int rows, int cols, RngState& rng) {
  RealMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a;
}

// Q diag(lambda) Q' with log-uniform eigenvalues spanning a ratio <= cond.
RealMatrix random_spd(int m, double cond, double scale, RngState& rng) {
  const RealMatrix q = random_matrix(m, m, rng).householderQr().householderQ();
  RealVector lambda(m);
  for (int i = 0; i < m; ++i) lambda(i) = scale * std::exp(std::log(cond) * rng.uniform());
  RealMatrix s = q * lambda.asDiagonal() * q.transpose();
  return (s + s.transpose()) / 2;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

class Check {
 public:
  Check(std::string name, double tol) { result_.name = std::move(name), result_.tolerance = tol; }
  void observe(double err) {
    if (!(err <= result_.worst)) result_.worst = std::isnan(err) ? INFINITY : err;
  }
  CheckResult done(std::string detail) {
    result_.passed = result_.worst <= result_.tolerance;
    result_.detail = std::move(detail);
    return result_;
  }
  CheckResult failed(const std::exception& e) {
    result_.passed = false;
    result_.detail = std::string("exception: ") + e.what();
    return result_;
  }

 private:
  CheckResult result_;
};

KernelSpec kotz_gaussian_twin() { return KernelSpec::kotz(1, 0.5, 1, 1, 1); }

std::vector<CheckResult> jacobian_checks(const ValidationOptions& opt) {
  Check closed("jacobian: determinant form against both singular-value forms", 1e-6);
  Check fd("jacobian: singular-value form against finite differences", 1e-4);
  try {
    RngState rng = RngState(opt.seed).split(1);
    for (int k = 0; k < opt.instances; ++k) {
      const int n = 1 + static_cast<int>(rng.uniform() * 4);
      const int m = 1 + static_cast<int>(rng.uniform() * n);
      const auto p = GbsParams::make(n, random_spd(m, 100, 1, rng), random_spd(m, 100, 1, rng));
      const RealMatrix v = random_matrix(n, m, rng);
      const auto rep = jacobian_report(v, p, true, 1e-6);
      closed.observe(std::abs(rep.det_form - rep.sv_form) / rep.sv_form);
      closed.observe(std::abs(rep.sv_form_second - rep.sv_form) / rep.sv_form);
      fd.observe(std::abs(*rep.fd_form - rep.sv_form) / rep.sv_form);
    }
    const std::string detail = std::to_string(opt.instances) + " random instances, n <= 4";
    return {closed.done(detail), fd.done(detail)};
  } catch (const std::exception& e) {
    return {closed.failed(e), fd.failed(e)};
  }
}

CheckResult univariate_check() {
  Check c("univariate: T density at n = m = 1 equals the BS density", 1e-12);
  try {
    const double pairs[3][2] = {{0.5, 1.0}, {1.0, 2.5}, {2.0, 0.3}};
    for (const auto& kernel : {KernelSpec::gaussian(1, 1), KernelSpec::kotz(2, 1, 1, 1, 1)}) {
      for (const auto& ab : pairs) {
        const auto p = GbsParams::make_scalar(1, RealMatrix::Constant(1, 1, ab[0]), ab[1]);
        for (int i = 0; i < 50; ++i) {
          const double t = ab[1] * std::exp(-3 + 6 * i / 49.0);
          c.observe(rel_err(logpdf_T(RealMatrix::Constant(1, 1, t), p, kernel),
                            logpdf_uni_gbs(t, ab[0], ab[1], kernel)));
        }
      }
    }
    return c.done("50-point grid, 3 parameter pairs, Gaussian and Kotz(2,1,1)");
  } catch (const std::exception& e) {
    return c.failed(e);
  }
}

CheckResult kernel_identity_check(const ValidationOptions& opt) {
  Check c("kernel identity: Gaussian equals Kotz(1, 1/2, 1)", 1e-10);
  try {
    RngState rng = RngState(opt.seed).split(2);
    const auto g = KernelSpec::gaussian(1, 1);
    const auto k = kotz_gaussian_twin();
    for (int i = 0; i < opt.instances; ++i) {
      const int m = 1 + static_cast<int>(rng.uniform() * 3);
      const int n = m + static_cast<int>(rng.uniform() * 3);
      const auto p = GbsParams::make(n, random_spd(m, 10, 1, rng), random_spd(m, 10, 1, rng));
      const RealMatrix t = random_spd(m, 10, 2, rng);
      const RealMatrix v = random_matrix(n, m, rng);
      const RealMatrix cm = random_matrix(m, m, rng);
      c.observe(rel_err(logpdf_T(t, p, g), logpdf_T(t, p, k)));
      c.observe(rel_err(logpdf_V(v, p, g), logpdf_V(v, p, k)));
      c.observe(rel_err(logpdf_T_inverse(t, p, g), logpdf_T_inverse(t, p, k)));
      c.observe(rel_err(logpdf_T_congruence(t, cm, p, g), logpdf_T_congruence(t, cm, p, k)));
      const double x = 0.1 + 3 * rng.uniform();
      c.observe(rel_err(logpdf_uni_gbs(x, 0.8, 1.2, g), logpdf_uni_gbs(x, 0.8, 1.2, k)));
      c.observe(rel_err(logpdf_sqrt_gbs(x, 0.8, 1.2, g), logpdf_sqrt_gbs(x, 0.8, 1.2, k)));
      ElementwiseParams ep{RealMatrix::Constant(n, m, 0.7), RealMatrix::Constant(n, m, 1.1)};
      const RealMatrix e = random_matrix(n, m, rng).cwiseAbs().array() + 0.1;
      c.observe(rel_err(logpdf_elementwise(e, ep, g), logpdf_elementwise(e, ep, k)));
    }
    return c.done(std::to_string(opt.instances) + " random inputs, every density operation");
  } catch (const std::exception& e) {
    return c.failed(e);
  }
}

CheckResult normalization_check() {
  Check c("normalization: quadrature of the branch T density (m = 1) and the BS density", 1e-6);
  try {
    boost::math::quadrature::exp_sinh<double> half_line;
    boost::math::quadrature::tanh_sinh<double> finite;
    const double b = 1.3, xi = 0.7;
    std::ostringstream d;
    for (int n : {1, 2, 3, 5}) {
      const auto p = GbsParams::make_scalar(n, RealMatrix::Constant(1, 1, xi), b);
      const auto kernel = KernelSpec::gaussian(1, 1);
      auto f = [&](double y) {
        return std::exp(logpdf_T(RealMatrix::Constant(1, 1, b + y), p, kernel,
                                 Convention::BranchNormalized));
      };
      const double mass = half_line.integrate(f);
      c.observe(std::abs(mass - 1));
      d << "n=" << n << ": " << mass << "; ";
    }
    for (const auto& kernel : {KernelSpec::gaussian(1, 1), KernelSpec::kotz(2, 1, 1, 1, 1)}) {
      auto f = [&](double t) { return std::exp(logpdf_uni_gbs(t, 0.6, b, kernel)); };
      const double total = half_line.integrate(f);
      const double lower = finite.integrate(f, 0.0, b);
      c.observe(std::abs(total - 1));
      c.observe(std::abs(lower - 0.5));
    }
    return c.done(d.str() + "BS density: total 1 and mass 1/2 below beta");
  } catch (const std::exception& e) {
    return c.failed(e);
  }
}

CheckResult round_trip_check(const ValidationOptions& opt) {
  Check c("round trips: forward(inverse(Z)) = Z and inverse(forward(V)) = V", 1e-10);
  try {
    RngState rng = RngState(opt.seed).split(3);
    for (int i = 0; i < opt.instances; ++i) {
      const int n = 1 + static_cast<int>(rng.uniform() * 4);
      const int m = 1 + static_cast<int>(rng.uniform() * n);
      const auto p = GbsParams::make(n, random_spd(m, 10, 1, rng), random_spd(m, 10, 1, rng));
      const RealMatrix z = random_matrix(n, m, rng);
      const RealMatrix z2 = forward_map(inverse_map_branch(z, p), p);
      c.observe((z2 - z).norm() / std::max(1.0, z.norm()));
      const RealMatrix v = inverse_map_branch(random_matrix(n, m, rng), p);
      const RealMatrix v2 = inverse_map_branch(forward_map(v, p), p);
      c.observe((v2 - v).norm() / std::max(1.0, v.norm()));
    }
    return c.done(std::to_string(opt.instances) + " random Z and branch-region V");
  } catch (const std::exception& e) {
    return c.failed(e);
  }
}

CheckResult transform_law_check(const ValidationOptions& opt) {
  Check c("transformed laws: inverse and congruence densities match change of variables", 1e-10);
  try {
    RngState rng = RngState(opt.seed).split(4);
    const int m = 2;
    for (int i = 0; i < opt.instances; ++i) {
      const int n = m + static_cast<int>(rng.uniform() * 4);
      const auto p = GbsParams::make(n, random_spd(m, 10, 1, rng), random_spd(m, 10, 1, rng));
      const auto kernel = KernelSpec::kotz(1.5, 0.8, 0.9, 1, 1);
      const RealMatrix s = random_spd(m, 10, 1, rng);
      const double log_det_s = std::log(s.determinant());
      c.observe(rel_err(logpdf_T_inverse(s, p, kernel),
                        logpdf_T(s.inverse(), p, kernel) - (m + 1) * log_det_s));
      const RealMatrix cm = random_matrix(m, m, rng);
      const RealMatrix cinv = cm.inverse();
      RealMatrix t = cinv.transpose() * s * cinv;
      t = (t + t.transpose()) / 2;
      c.observe(rel_err(logpdf_T_congruence(s, cm, p, kernel),
                        logpdf_T(t, p, kernel) - (m + 1) * std::log(std::abs(cm.determinant()))));
    }
    return c.done(std::to_string(opt.instances) + " random SPD inputs at m = 2");
  } catch (const std::exception& e) {
    return c.failed(e);
  }
}

CheckResult loglik_check(const ValidationOptions& opt) {
  Check c("likelihood: expanded log-likelihood equals the sum of T log densities", 1e-8);
  try {
    RngState rng = RngState(opt.seed).split(5);
    const int m = 2, n = 6;
    const RealMatrix xi{{1, 0.3}, {0.3, 0.8}};
    const auto p = GbsParams::make_scalar(n, xi, 100);
    const auto batch = sample_batch(p, KernelSpec::gaussian(n, m), 20, rng);
    for (int i = 0; i < 10; ++i) {
      KbsParameters kp;
      kp.family = i % 2 == 0 ? KernelFamily::Gaussian : KernelFamily::Kotz;
      kp.beta = 50 + 100 * rng.uniform();
      kp.xi = random_spd(m, 10, 1, rng);
      kp.q = 0.5 + 2 * rng.uniform();
      kp.r = 0.2 + rng.uniform();
      kp.s = 0.5 + rng.uniform();
      const auto gp = GbsParams::make_scalar(n, kp.xi, kp.beta);
      double direct = 0;
      for (const auto& t : batch.matrices) direct += logpdf_T(t, gp, kp.kernel(n, m));
      c.observe(rel_err(loglik(kp, batch, n).value, direct));
    }
    return c.done("10 random parameter points on a K = 20 batch");
  } catch (const std::exception& e) {
    return c.failed(e);
  }
}

}  // namespace

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string ValidationReport::text() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS  " : "FAIL  ") << c.name << "\n"
        << "      worst error " << c.worst << " (tolerance " << c.tolerance << ")";
    if (!c.detail.empty()) out << "; " << c.detail;
    out << "\n";
  }
  out << (all_passed() ? "all checks passed" : "some checks failed") << "\n";
  return out.str();
}

std::string ValidationReport::json() const {
  nlohmann::json j;
  j["passed"] = all_passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"worst", std::isfinite(c.worst) ? nlohmann::json(c.worst) : nlohmann::json("inf")},
                           {"tolerance", c.tolerance},
                           {"detail", c.detail}});
  }
  return j.dump(2) + "\n";
}

ValidationReport run_validation(const ValidationOptions& options) {
  ValidationReport rep;
  for (auto& c : jacobian_checks(options)) rep.checks.push_back(std::move(c));
  rep.checks.push_back(univariate_check());
  rep.checks.push_back(kernel_identity_check(options));
  rep.checks.push_back(normalization_check());
  rep.checks.push_back(round_trip_check(options));
  rep.checks.push_back(transform_law_check(options));
  rep.checks.push_back(loglik_check(options));
  return rep;
}

}  // namespace gbs
