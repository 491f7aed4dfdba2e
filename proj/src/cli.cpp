#include "gbs/cli.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gbs/density.hpp"
#include "gbs/fit.hpp"
#include "gbs/io.hpp"
#include "gbs/validate.hpp"
#include "json.hpp"

namespace gbs {

namespace {

struct Settings {
  std::string config;
  std::string data;
  std::string out;
  int n = 0;
  int m = 0;
  std::string family = "gaussian";
  double q = 1, r = 0.5, s = 1;
  std::string beta;
  std::string xi;
  std::string convention;
  std::uint64_t seed = 0;
  int count = 0;
  std::string s_grid;
  int jobs = 1;
};

Error usage(const std::string& what) { return Error(ErrorKind::Usage, what); }

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (used == 0 || used != cell.size()) throw usage(std::string(flag) + ": bad number '" + cell + "'");
  }
  if (out.empty()) throw usage(std::string(flag) + " needs at least one number");
  return out;
}

Convention parse_convention(const std::string& text, Convention fallback) {
  if (text.empty()) return fallback;
  if (text == "as-published") return Convention::AsPublished;
  if (text == "branch") return Convention::BranchNormalized;
  throw usage("--convention must be as-published or branch");
}

KernelSpec kernel_of(const Settings& st, int n, int m) {
  if (st.family == "gaussian") return KernelSpec::gaussian(n, m);
  if (st.family == "kotz") return KernelSpec::kotz(st.q, st.r, st.s, n, m);
  throw usage("--family must be gaussian or kotz");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw usage(what);
}

// Xi from --xi (upper triangle); beta from --beta as a scalar or upper triangle.
GbsParams params_of(const Settings& st, int m) {
  require(st.n >= 1, "--n (degrees) is required");
  require(!st.xi.empty(), "--xi (upper triangle of Xi) is required");
  require(!st.beta.empty(), "--beta is required");
  const auto xi_entries = parse_list(st.xi, "--xi");
  const int xi_m = dim_from_triangle_count(xi_entries.size());
  require(xi_m == m, "--xi needs " + std::to_string(m * (m + 1) / 2) + " entries for m = " + std::to_string(m));
  const RealMatrix xi = from_upper_triangle(Eigen::Map<const RealVector>(xi_entries.data(), xi_entries.size()), m);
  const auto beta_entries = parse_list(st.beta, "--beta");
  if (beta_entries.size() == 1) return GbsParams::make_scalar(st.n, xi, beta_entries[0]);
  require(dim_from_triangle_count(beta_entries.size()) == m, "--beta must be a scalar or an upper triangle");
  return GbsParams::make(st.n, xi, from_upper_triangle(Eigen::Map<const RealVector>(beta_entries.data(), beta_entries.size()), m));
}

int infer_m(const Settings& st) {
  if (st.m > 0) return st.m;
  require(!st.xi.empty(), "--m or --xi is required");
  const int m = dim_from_triangle_count(parse_list(st.xi, "--xi").size());
  require(m > 0, "--xi length is not a triangular number");
  return m;
}

void emit(const std::string& text, const Settings& st, std::ostream& out) {
  if (st.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(st.out);
  if (!f) throw Error(ErrorKind::DataFormat, "cannot write " + st.out);
  f << text;
}

bool wants_json(const Settings& st) {
  return st.out.size() >= 5 && st.out.compare(st.out.size() - 5, 5, ".json") == 0;
}

int cmd_density(const Settings& st, std::ostream& out) {
  require(!st.data.empty(), "--data is required");
  const SampleBatch batch = read_batch(st.data);
  require(st.m == 0 || st.m == batch.m, "--m does not match the data");
  const auto params = params_of(st, batch.m);
  const auto kernel = kernel_of(st, params.n(), batch.m);
  const auto convention = parse_convention(st.convention, Convention::AsPublished);
  std::ostringstream text;
  text << "row,log_density,in_branch\n";
  for (std::size_t k = 0; k < batch.count(); ++k) {
    text << k + 1 << ',';
    try {
      const auto e = evaluate_T(batch.matrices[k], params, kernel, convention);
      text << format_double(e.log_density) << ',' << (e.in_branch ? 1 : 0) << "\n";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OutsideSupport) throw;
      text << "-inf,0\n";
    }
  }
  emit(text.str(), st, out);
  return 0;
}

int cmd_sample(const Settings& st, std::ostream& out) {
  require(st.count >= 1, "--count (>= 1) is required");
  const int m = infer_m(st);
  const auto params = params_of(st, m);
  const auto kernel = kernel_of(st, params.n(), m);
  const SampleBatch batch = sample_batch(params, kernel, st.count, RngState(st.seed));
  std::ostringstream text;
  if (wants_json(st)) {
    write_batch_json(batch, text);
  } else {
    write_batch_csv(batch, text);
  }
  emit(text.str(), st, out);
  return 0;
}

FitOptions fit_options(const Settings& st) {
  FitOptions o;
  o.seed = st.seed;
  o.convention = parse_convention(st.convention, Convention::BranchNormalized);
  return o;
}

int cmd_fit(const Settings& st, std::ostream& out) {
  require(!st.data.empty(), "--data is required");
  require(st.n >= 1, "--n (degrees) is required");
  const SampleBatch batch = read_batch(st.data);
  FitSpec spec;
  if (st.family == "gaussian") {
    spec = FitSpec::gaussian(fit_options(st));
  } else if (st.family == "kotz") {
    spec = FitSpec::kotz(st.s, fit_options(st));
  } else {
    throw usage("--family must be gaussian or kotz");
  }
  const FitResult fit = fit_mle(batch, spec, st.n);
  emit(wants_json(st) ? fit_result_json(fit, st.n) : fit_result_text(fit, st.n), st, out);
  return 0;
}

int cmd_compare(const Settings& st, std::ostream& out) {
  require(!st.data.empty(), "--data is required");
  require(st.n >= 1, "--n (degrees) is required");
  require(st.jobs >= 1, "--jobs must be >= 1");
  const SampleBatch batch = read_batch(st.data);
  const auto grid = st.s_grid.empty() ? default_s_grid() : parse_list(st.s_grid, "--s-grid");
  const auto table = profile_s_grid(batch, grid, st.n, fit_options(st), st.jobs);
  emit(wants_json(st) ? profile_json(table) : profile_text(table), st, out);
  return 0;
}

int cmd_validate(const Settings& st, std::ostream& out) {
  ValidationOptions o;
  o.seed = st.seed;
  const auto report = run_validation(o);
  emit(wants_json(st) ? report.json() : report.text(), st, out);
  return report.all_passed() ? 0 : 1;
}

std::string json_scalar_text(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) {
      if (!x.is_number()) throw usage("config key '" + key + "' must be a list of numbers");
      if (!s.empty()) s += ',';
      s += format_double(x.get<double>());
    }
    return s;
  }
  throw usage("config key '" + key + "' has an unsupported type");
}

// Fills options not given on the command line from a JSON object whose keys
// are the long flag names.
void apply_config(const std::string& path, CLI::App& sub) {
  std::ifstream in(path);
  if (!in) throw usage("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw usage("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw usage("config " + path + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw usage("config key '" + key + "' is not a flag of '" + sub.get_name() + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(json_scalar_text(value, key));
    opt->run_callback();
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Settings st;
  using Adder = std::function<void(CLI::App*)>;
  CLI::App app{"Matrix-variate generalized Birnbaum-Saunders distributions", "gbs"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  const Adder data = [&](CLI::App* c) { c->add_option("--data", st.data, "Input batch (.csv or .json)"); };
  const Adder output = [&](CLI::App* c) { c->add_option("--out", st.out, "Output file; .json selects JSON"); };
  const Adder config = [&](CLI::App* c) { c->add_option("--config", st.config, "JSON file of flag values"); };
  const Adder degrees = [&](CLI::App* c) { c->add_option("--n", st.n, "Degrees n >= m"); };
  const Adder model = [&](CLI::App* c) {
    c->add_option("--m", st.m, "Matrix dimension m");
    c->add_option("--family", st.family, "gaussian or kotz");
    c->add_option("--q", st.q, "Kotz q");
    c->add_option("--r", st.r, "Kotz r");
    c->add_option("--s", st.s, "Kotz s");
    c->add_option("--beta", st.beta, "Scale: scalar b (beta = b I) or upper triangle");
    c->add_option("--xi", st.xi, "Upper triangle of Xi, row-major");
  };
  const Adder convention = [&](CLI::App* c) {
    c->add_option("--convention", st.convention, "as-published or branch");
  };
  const Adder seed = [&](CLI::App* c) { c->add_option("--seed", st.seed, "Random seed"); };

  auto* density = app.add_subcommand("density", "Log density of each matrix in a batch");
  for (const auto& f : {data, output, config, degrees, model, convention}) f(density);

  auto* sample = app.add_subcommand("sample", "Draw a batch of T = V'V");
  for (const auto& f : {output, config, degrees, model, seed}) f(sample);
  sample->add_option("--count", st.count, "Number of draws");

  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit with beta = b I");
  for (const auto& f : {data, output, config, degrees, convention, seed}) f(fit);
  fit->add_option("--family", st.family, "gaussian or kotz");
  fit->add_option("--s", st.s, "Fixed Kotz s");

  auto* compare = app.add_subcommand("compare", "Gaussian baseline against Kotz fits over an s grid");
  for (const auto& f : {data, output, config, degrees, convention, seed}) f(compare);
  compare->add_option("--s-grid", st.s_grid, "Comma-separated s values");
  compare->add_option("--jobs", st.jobs, "Worker threads");

  auto* validate = app.add_subcommand("validate", "Run the numerical self-checks");
  for (const auto& f : {output, config, seed}) f(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (!st.config.empty()) apply_config(st.config, *chosen);
    if (chosen == density) return cmd_density(st, out);
    if (chosen == sample) return cmd_sample(st, out);
    if (chosen == fit) return cmd_fit(st, out);
    if (chosen == compare) return cmd_compare(st, out);
    return cmd_validate(st, out);
  } catch (const Error& e) {
    err << "gbs: " << e.what() << "\n";
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const CLI::Error& e) {
    err << "gbs: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "gbs: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gbs
