// One PASS/FAIL line per acceptance criterion; exit status is nonzero when
// any criterion fails. Reference values come from tests/oracles.hpp.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "gbs/cli.hpp"
#include "gbs/density.hpp"
#include "gbs/fit.hpp"
#include "gbs/io.hpp"
#include "gbs/sample.hpp"
#include "oracles.hpp"

using namespace gbs;
using oracle::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Worst observed error against a tolerance.
struct Worst {
  double tol;
  double worst = 0;
  bool finite = true;
  void see(double err) {
    if (!std::isfinite(err)) finite = false;
    worst = std::max(worst, err);
  }
  bool ok() const { return finite && worst <= tol; }
  std::string str() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "worst %.3g (tol %.0e)", worst, tol);
    return buf;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

RealMatrix one(double x) { return RealMatrix::Constant(1, 1, x); }

RealMatrix forward_oracle(const RealMatrix& v, const GbsParams& p) {
  const RealMatrix vpt = v * (v.transpose() * v).inverse();
  return (v * p.delta().inverse() - vpt * p.delta()) * p.xi().inverse();
}

Outcome jacobians() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1);
  Worst closed{1e-6}, fd{1e-4};
  for (int k = 0; k < 200; ++k) {
    const int n = rng.integer(1, 4), m = rng.integer(1, n);
    const auto p = GbsParams::make(n, oracle::random_spd(m, 100, rng), oracle::random_spd(m, 100, rng));
    const RealMatrix v = oracle::random_matrix(n, m, rng);
    const double det = jacobian_det_form(v, p);
    const double sv1 = jacobian_sv_form(v, p, SvVariant::First);
    const double sv2 = jacobian_sv_form(v, p, SvVariant::Second);
    const double num = oracle::fd_jacobian([&](const RealMatrix& x) { return forward_oracle(x, p); }, v, 1e-6);
    closed.see(std::abs(det - sv1) / sv1);
    closed.see(std::abs(sv2 - sv1) / sv1);
    fd.see(std::abs(num - sv1) / sv1);
  }
  const double secs = seconds_since(t0);
  return {closed.ok() && fd.ok() && secs < 30,
          "200 instances; closed forms " + closed.str() + "; finite differences " + fd.str() +
              fmt("; %.2f s", secs)};
}

Outcome univariate() {
  Worst w{1e-12};
  for (const auto& k : {KernelSpec::gaussian(1, 1), KernelSpec::kotz(2, 1, 1, 1, 1)}) {
    for (auto [a, b] : {std::pair{0.5, 1.0}, {1.0, 2.5}, {2.0, 0.3}}) {
      const auto p = GbsParams::make_scalar(1, one(a), b);
      for (int i = 0; i < 50; ++i) {
        const double t = b * std::exp(-3 + 6 * i / 49.0);
        const double lt = logpdf_T(one(t), p, k);
        w.see(std::abs(lt - logpdf_uni_gbs(t, a, b, k)) / std::max(1.0, std::abs(lt)));
        if (k.family == KernelFamily::Gaussian) {
          const double ref = std::log(oracle::bs_density(t, a, b));
          w.see(std::abs(lt - ref) / std::max(1.0, std::abs(ref)));
        }
      }
    }
  }
  return {w.ok(), "50-point grids, 3 (alpha, beta) pairs, Gaussian and Kotz; " + w.str()};
}

Outcome kernel_identity() {
  const auto g = [](int n, int m) { return KernelSpec::gaussian(n, m); };
  const auto twin = [](int n, int m) { return KernelSpec::kotz(1, 0.5, 1, n, m); };
  Rng rng(3);
  Worst w{1e-10};
  for (int trial = 0; trial < 100; ++trial) {
    const int m = rng.integer(1, 3), n = m + rng.integer(0, 3);
    const auto p = GbsParams::make(n, oracle::random_spd(m, 10, rng), oracle::random_spd(m, 10, rng));
    const RealMatrix t = oracle::random_spd(m, 10, rng, 0.5);
    const RealMatrix v = oracle::random_matrix(n, m, rng);
    const RealMatrix c = oracle::random_matrix(m, m, rng);
    const double x = 0.05 + 4 * rng.uniform();
    const RealMatrix e = v.cwiseAbs().array() + 0.05;
    const ElementwiseParams ep{RealMatrix::Constant(n, m, 0.8), RealMatrix::Constant(n, m, 1.2)};
    w.see(oracle::rel(logpdf_T(t, p, g(n, m)), logpdf_T(t, p, twin(n, m))));
    // Branch convention on a point of the branch region.
    const RealMatrix tb = p.delta() * (RealMatrix::Identity(m, m) + t) * p.delta();
    w.see(oracle::rel(logpdf_T(tb, p, g(n, m), Convention::BranchNormalized),
                      logpdf_T(tb, p, twin(n, m), Convention::BranchNormalized)));
    w.see(oracle::rel(logpdf_V(v, p, g(n, m)), logpdf_V(v, p, twin(n, m))));
    w.see(oracle::rel(logpdf_T_inverse(t, p, g(n, m)), logpdf_T_inverse(t, p, twin(n, m))));
    w.see(oracle::rel(logpdf_T_congruence(t, c, p, g(n, m)), logpdf_T_congruence(t, c, p, twin(n, m))));
    w.see(oracle::rel(logpdf_uni_gbs(x, 0.9, 1.1, g(1, 1)), logpdf_uni_gbs(x, 0.9, 1.1, twin(1, 1))));
    w.see(oracle::rel(logpdf_sqrt_gbs(x, 0.9, 1.1, g(1, 1)), logpdf_sqrt_gbs(x, 0.9, 1.1, twin(1, 1))));
    w.see(oracle::rel(logpdf_elementwise(e, ep, g(n, m)), logpdf_elementwise(e, ep, twin(n, m))));
    w.see(oracle::rel(log_h(g(n, m), x), log_h(twin(n, m), x)));
  }
  return {w.ok(), "100 random inputs, all density operations; " + w.str()};
}

Outcome normalization() {
  Worst branch{1e-6}, total{1e-8}, median{1e-6};
  for (const auto& k : {KernelSpec::gaussian(1, 1), KernelSpec::kotz(2, 1, 1, 1, 1)}) {
    for (int n : {1, 2, 3, 5}) {
      const double b = 1.7;
      const auto p = GbsParams::make_scalar(n, one(0.8), b);
      const auto f = [&](double t) {
        return std::exp(logpdf_T(one(t), p, k.with_dims(n, 1), Convention::BranchNormalized));
      };
      branch.see(std::abs(oracle::integrate_from(f, b) - 1));
    }
    for (auto [a, b] : {std::pair{0.5, 1.0}, {1.0, 2.0}, {2.0, 5.0}}) {
      const auto f = [&](double t) { return t == 0 ? 0.0 : std::exp(logpdf_uni_gbs(t, a, b, k)); };
      total.see(std::abs(oracle::integrate_from(f, 0) - 1));
      median.see(std::abs(oracle::integrate(f, 0, b) - 0.5));
    }
  }
  return {branch.ok() && total.ok() && median.ok(), "T branch mass n in {1,2,3,5} " + branch.str() +
                                                        "; univariate mass " + total.str() + "; mass below beta " +
                                                        median.str()};
}

Outcome round_trips() {
  Rng rng(5);
  Worst zz{1e-10}, vv{1e-10};
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.integer(1, 5), m = rng.integer(1, n);
    const auto p = GbsParams::make(n, oracle::random_spd(m, 10, rng), oracle::random_spd(m, 10, rng));
    const RealMatrix z = oracle::random_matrix(n, m, rng);
    zz.see((forward_map(inverse_map_branch(z, p), p) - z).norm() / std::max(1.0, z.norm()));
    const RealMatrix v = inverse_map_branch(oracle::random_matrix(n, m, rng), p);
    vv.see((inverse_map_branch(forward_map(v, p), p) - v).norm() / std::max(1.0, v.norm()));
  }
  return {zz.ok() && vv.ok(), "100 Z: " + zz.str() + "; 100 branch V: " + vv.str()};
}

Outcome transformed_laws() {
  Rng rng(6);
  Worst inv{1e-10}, cong{1e-10};
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.integer(0, 4);
    const auto p = GbsParams::make(n, oracle::random_spd(2, 10, rng), oracle::random_spd(2, 10, rng));
    const auto k = trial % 2 ? KernelSpec::gaussian(n, 2) : KernelSpec::kotz(2, 1.3, 0.8, n, 2);
    const RealMatrix s = oracle::random_spd(2, 10, rng);
    inv.see(oracle::rel(logpdf_T_inverse(s, p, k),
                        logpdf_T(RealMatrix(s.inverse()), p, k) - 3 * std::log(oracle::determinant(s))));
    const RealMatrix c = oracle::random_matrix(2, 2, rng);
    const RealMatrix ci = c.inverse();
    RealMatrix t = ci.transpose() * s * ci;
    t = (t + t.transpose()) / 2;
    cong.see(oracle::rel(logpdf_T_congruence(s, c, p, k),
                         logpdf_T(t, p, k) - 3 * std::log(std::abs(oracle::determinant(c)))));
  }
  return {inv.ok() && cong.ok(), "m = 2, 100 inputs; inverse " + inv.str() + "; congruence " + cong.str()};
}

Outcome likelihood_paths() {
  Rng rng(7);
  Worst w{1e-8};
  for (int trial = 0; trial < 20; ++trial) {
    const int m = rng.integer(1, 3), n = m + rng.integer(0, 4);
    const auto gen = GbsParams::make_scalar(n, oracle::random_spd(m, 10, rng, 0.3), 1 + 5 * rng.uniform());
    const auto data = sample_batch(gen, KernelSpec::gaussian(n, m), 20, RngState(trial));
    KbsParameters p;
    p.xi = oracle::random_spd(m, 10, rng, 0.3);
    p.beta = gen.beta()(0, 0) * (0.5 + rng.uniform());
    if (trial % 2) {
      p.family = KernelFamily::Kotz;
      p.q = 0.5 + 3 * rng.uniform();
      p.r = 0.2 + 2 * rng.uniform();
      p.s = 0.5 + 2 * rng.uniform();
    }
    const auto g = GbsParams::make_scalar(n, p.xi, p.beta);
    double sum = 0;
    for (const auto& t : data.matrices) sum += logpdf_T(t, g, p.kernel(n, m));
    w.see(oracle::rel(loglik(p, data, n).value, sum));
  }
  return {w.ok(), "20 random batches of 20, Gaussian and Kotz; " + w.str()};
}

Outcome mle_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const RealMatrix xi = (RealMatrix(2, 2) << 1, 0.3, 0.3, 0.8).finished();
  const auto data = sample_batch(GbsParams::make_scalar(6, xi, 100), KernelSpec::gaussian(6, 2), 200, RngState(0));
  const auto fit = fit_mle(data, FitSpec::gaussian(), 6);
  const double secs = seconds_since(t0);
  const double beta_err = std::abs(fit.estimates.beta / 100 - 1);
  double xi_err = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) xi_err = std::max(xi_err, std::abs(fit.estimates.xi(i, j) / xi(i, j) - 1));
  }
  return {fit.converged && beta_err < 0.05 && xi_err < 0.15 && secs < 120,
          fmt("seed 0, K = 200: beta %.5g", fit.estimates.beta) + fmt(" (rel err %.3g)", beta_err) +
              fmt(", worst Xi rel err %.3g", xi_err) + fmt(", %.2f s", secs)};
}

Outcome model_selection() {
  bool ok = true;
  for (double d : {11.31758, 12.05738, 15.66898, 16.81938, 13.85258}) {
    ok = ok && to_string(evidence_grade(d)) == "Very strong";
  }
  // compare on a synthetic batch with the default grid.
  const auto dir = std::filesystem::temp_directory_path() / ("gbs_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "batch.csv").string();
  const auto call = [](std::vector<std::string> args, std::string& captured) {
    args.insert(args.begin(), "gbs");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    captured = out.str();
    return code;
  };
  std::string text;
  ok = ok && call({"sample", "--n", "6", "--xi", "1,0.3,0.8", "--beta", "100", "--seed", "3", "--count", "20",
                   "--out", csv},
                  text) == 0;
  ok = ok && call({"compare", "--data", csv, "--n", "6"}, text) == 0;
  std::filesystem::remove_all(dir);
  std::istringstream lines(text);
  int header_cols = 0, rows = 0, bad_rows = 0;
  bool in_table = false;
  for (std::string line; std::getline(lines, line);) {
    std::istringstream ss(line);
    std::vector<std::string> cells;
    for (std::string c; ss >> c;) cells.push_back(c);
    if (!in_table && !cells.empty() && cells[0] == "s") {
      header_cols = static_cast<int>(cells.size());
      in_table = true;
    } else if (in_table) {
      if (cells.empty()) break;
      ++rows;
      if (cells.size() != 8) ++bad_rows;
    }
  }
  ok = ok && header_cols == 8 && rows == 11 && bad_rows == 0;
  return {ok, "5 published differences graded Very strong; compare table " + std::to_string(header_cols) +
                  " columns, " + std::to_string(rows) + " rows (baseline + 10 s values)"};
}

Outcome sampler_density() {
  // m = 1, n = 2 chi-square test on equiprobable bins from quadrature.
  const double b = 1.5;
  const auto p = GbsParams::make_scalar(2, one(0.6), b);
  const auto k = KernelSpec::gaussian(1, 1);
  const auto pdf = [&](double t) { return std::exp(logpdf_T(one(t), p, k, Convention::BranchNormalized)); };
  const auto cdf = [&](double x) { return x <= b ? 0.0 : oracle::integrate(pdf, b, x); };
  const int bins = 20, draws = 10000;
  const auto edges = oracle::quantile_edges(cdf, b, bins);
  std::vector<int> counts(bins, 0);
  RngState rng(2024);
  for (int i = 0; i < draws; ++i) {
    const double t = sample_T(p, k, rng)(0, 0);
    ++counts[static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), t) - edges.begin() - 1)];
  }
  double stat = 0;
  for (int c : counts) stat += (c - draws / double(bins)) * (c - draws / double(bins)) / (draws / double(bins));
  const double pval = oracle::chi2_pvalue(stat, bins - 1);

  // m = 2 importance sampling with a shifted Wishart proposal.
  const RealMatrix xi = (RealMatrix(2, 2) << 1, 0.3, 0.3, 0.8).finished();
  const auto p2 = GbsParams::make_scalar(6, xi, 1.0);
  const auto k2 = KernelSpec::gaussian(6, 2);
  const double scale = oracle::jacobi_eigenvalues(xi * xi)(0);
  const RealMatrix sigma = scale * RealMatrix::Identity(2, 2);
  Rng orng(8);
  const int n_is = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n_is; ++i) {
    const RealMatrix x = oracle::random_matrix(6, 2, orng);
    const RealMatrix w = scale * x.transpose() * x;
    const RealMatrix t = p2.delta() * (RealMatrix::Identity(2, 2) + w) * p2.delta();
    const double weight = std::exp(logpdf_T(t, p2, k2, Convention::BranchNormalized) -
                                   oracle::wishart_log_density(w, 6, sigma));
    sum += weight;
    sum2 += weight * weight;
  }
  const double mass = sum / n_is;
  const double se = std::sqrt((sum2 / n_is - mass * mass) / n_is);
  return {pval > 0.01 && std::abs(mass - 1) < 3 * se,
          fmt("chi-square p = %.3g (10^4 draws, 20 bins)", pval) + fmt("; m = 2 mass %.4f", mass) +
              fmt(" +- %.4f", se)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"Jacobian triple agreement", jacobians},
      {"univariate reduction", univariate},
      {"kernel identity", kernel_identity},
      {"normalization", normalization},
      {"transformation round trips", round_trips},
      {"inverse and congruence laws", transformed_laws},
      {"likelihood path equality", likelihood_paths},
      {"MLE recovery", mle_recovery},
      {"model-selection fixtures", model_selection},
      {"sampler-density agreement", sampler_density},
  };
  int failures = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
  }
  std::printf("%d of %d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
