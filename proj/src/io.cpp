#include "gbs/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace gbs {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string header_for(int m) {
  std::string h;
  for (int i = 1; i <= m; ++i) {
    for (int j = i; j <= m; ++j) {
      if (!h.empty()) h += ',';
      h += "t" + std::to_string(i) + std::to_string(j);
    }
  }
  return h;
}

double parse_number(const std::string& cell, const std::string& where) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::DataFormat, where + ": not a number: '" + cell + "'");
  }
  if (used != cell.size() || !std::isfinite(x)) {
    throw Error(ErrorKind::DataFormat, where + ": not a finite number: '" + cell + "'");
  }
  return x;
}

void check_spd(const RealMatrix& t, const std::string& where) {
  try {
    require_spd(t, "matrix");
  } catch (const Error& e) {
    throw Error(ErrorKind::NotSpd, where + ": " + e.what());
  }
}

json matrix_json(const RealMatrix& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(row);
  }
  return rows;
}

RealMatrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::DataFormat, where + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  RealMatrix a(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows) {
      throw Error(ErrorKind::DataFormat, where + ": row " + std::to_string(i + 1) + " must have " +
                                             std::to_string(rows) + " entries");
    }
    for (Eigen::Index k = 0; k < rows; ++k) {
      const auto& x = row[static_cast<std::size_t>(k)];
      if (!x.is_number()) throw Error(ErrorKind::DataFormat, where + ": non-numeric entry");
      a(i, k) = x.get<double>();
    }
  }
  return a;
}

json kernel_json(const KernelSpec& k) { return json::parse(kernel_to_json(k)); }

json estimates_json(const KbsParameters& p) {
  json j;
  j["family"] = p.family == KernelFamily::Gaussian ? "gaussian" : "kotz";
  j["beta"] = p.beta;
  j["xi"] = matrix_json(p.xi);
  if (p.family == KernelFamily::Kotz) {
    j["r"] = p.r;
    j["q"] = p.q;
    j["s"] = p.s;
  }
  return j;
}

json fit_json(const FitResult& fit, int n) {
  json j;
  j["n"] = n;
  j["estimates"] = estimates_json(fit.estimates);
  j["loglik_max"] = fit.loglik_max;
  j["n_params"] = fit.n_params;
  j["sample_size"] = fit.sample_size;
  j["bic_star"] = fit.bic_star;
  j["bic_star_size"] = "K (sample size)";
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["seed"] = fit.seed;
  j["convention"] = to_string(fit.convention);
  return j;
}

// Left-aligned first column, right-aligned numbers.
std::string render_table(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      if (c > 0) line += "  ";
      line += c == 0 ? row[c] + pad : pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7g", x);
  return buf;
}

std::string extension_of(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

RealVector upper_triangle(const RealMatrix& a) {
  const auto m = a.rows();
  RealVector out(m * (m + 1) / 2);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) out(idx++) = a(i, j);
  }
  return out;
}

RealMatrix from_upper_triangle(const RealVector& entries, int m) {
  if (entries.size() != m * (m + 1) / 2) {
    throw Error(ErrorKind::DataFormat, "expected " + std::to_string(m * (m + 1) / 2) +
                                           " upper-triangle entries for m = " + std::to_string(m));
  }
  RealMatrix a(m, m);
  Eigen::Index idx = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) a(i, j) = a(j, i) = entries(idx++);
  }
  return a;
}

int dim_from_triangle_count(std::size_t count) {
  for (int m = 1; m * (m + 1) / 2 <= static_cast<int>(count); ++m) {
    if (static_cast<std::size_t>(m * (m + 1) / 2) == count) return m;
  }
  return -1;
}

std::string to_string(Convention convention) {
  return convention == Convention::AsPublished ? "as-published" : "branch";
}

SampleBatch read_batch_csv(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorKind::DataFormat, source + ": empty file");
  const int m = dim_from_triangle_count(header.size());
  if (m < 1 || split_csv(header_for(m)) != header) {
    throw Error(ErrorKind::DataFormat,
                source + ": line " + std::to_string(line_no) + ": header must be t11,t12,...,tmm");
  }
  SampleBatch batch;
  batch.m = m;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ": line " + std::to_string(line_no);
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::DataFormat, where + ": expected " + std::to_string(header.size()) +
                                             " fields, found " + std::to_string(cells.size()));
    }
    RealVector entries(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      entries(static_cast<Eigen::Index>(c)) = parse_number(cells[c], where);
    }
    RealMatrix t = from_upper_triangle(entries, m);
    check_spd(t, where);
    batch.matrices.push_back(std::move(t));
  }
  if (batch.matrices.empty()) throw Error(ErrorKind::DataFormat, source + ": no data rows");
  return batch;
}

void write_batch_csv(const SampleBatch& batch, std::ostream& out) {
  out << header_for(batch.m) << "\n";
  for (const auto& t : batch.matrices) {
    const RealVector u = upper_triangle(t);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (i > 0) out << ',';
      out << format_double(u(i));
    }
    out << "\n";
  }
}

SampleBatch read_batch_json(std::istream& in, const std::string& source) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::DataFormat, source + ": " + e.what());
  }
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("matrices")) throw Error(ErrorKind::DataFormat, source + ": missing \"matrices\"");
    list = &j["matrices"];
  }
  if (!list->is_array() || list->empty()) {
    throw Error(ErrorKind::DataFormat, source + ": expected a nonempty array of matrices");
  }
  SampleBatch batch;
  for (std::size_t k = 0; k < list->size(); ++k) {
    const std::string where = source + ": matrix " + std::to_string(k + 1);
    RealMatrix t = matrix_from_json((*list)[k], where);
    if (k == 0) batch.m = static_cast<int>(t.rows());
    if (t.rows() != batch.m) throw Error(ErrorKind::DataFormat, where + ": dimension differs from matrix 1");
    check_spd(t, where);
    batch.matrices.push_back(std::move(t));
  }
  return batch;
}

void write_batch_json(const SampleBatch& batch, std::ostream& out) {
  json j;
  if (batch.provenance) {
    const auto& p = *batch.provenance;
    j["provenance"] = {{"n", p.params.n()},
                       {"xi", matrix_json(p.params.xi())},
                       {"beta", matrix_json(p.params.beta())},
                       {"kernel", kernel_json(p.kernel)},
                       {"seed", p.seed},
                       {"branch", "all eigenvalues of beta^-1 T >= 1"}};
  }
  j["matrices"] = json::array();
  for (const auto& t : batch.matrices) j["matrices"].push_back(matrix_json(t));
  out << j.dump(2) << "\n";
}

SampleBatch read_batch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::DataFormat, "cannot open " + path);
  return extension_of(path) == ".json" ? read_batch_json(in, path) : read_batch_csv(in, path);
}

void write_batch(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::DataFormat, "cannot write " + path);
  if (extension_of(path) == ".json") {
    write_batch_json(batch, out);
  } else {
    write_batch_csv(batch, out);
  }
}

std::string fit_result_json(const FitResult& fit, int n) { return fit_json(fit, n).dump(2) + "\n"; }

std::string fit_result_text(const FitResult& fit, int n) {
  const auto& e = fit.estimates;
  std::ostringstream out;
  out << "family      " << (e.family == KernelFamily::Gaussian ? "gaussian" : "kotz") << "\n";
  if (e.family == KernelFamily::Kotz) out << "s (fixed)   " << short_num(e.s) << "\n";
  out << "n (fixed)   " << n << "\n";
  out << "beta        " << format_double(e.beta) << "\n";
  const auto m = e.xi.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      out << "alpha" << i + 1 << j + 1 << "     " << format_double(e.xi(i, j)) << "\n";
    }
  }
  if (e.family == KernelFamily::Kotz) {
    out << "r           " << format_double(e.r) << "\n";
    out << "q           " << format_double(e.q) << "\n";
  }
  out << "loglik      " << format_double(fit.loglik_max) << "\n";
  out << "n_p         " << fit.n_params << "\n";
  out << "K           " << fit.sample_size << "\n";
  out << "BIC*        " << format_double(fit.bic_star) << "  (penalty uses K)\n";
  out << "converged   " << (fit.converged ? "yes" : "no") << "\n";
  out << "iterations  " << fit.iterations << "\n";
  out << "seed        " << fit.seed << "\n";
  out << "convention  " << to_string(fit.convention) << "\n";
  return out.str();
}

std::string profile_json(const ProfileTable& table) {
  json j;
  j["n"] = table.n;
  j["gaussian"] = fit_json(table.gaussian, table.n);
  j["difference"] = "BIC*_gaussian - BIC*_kotz";
  j["rows"] = json::array();
  for (const auto& row : table.rows) {
    json r;
    r["s"] = row.s;
    r["kotz"] = fit_json(row.kotz, table.n);
    r["bic_diff"] = row.bic_diff;
    r["favors"] = row.bic_diff >= 0 ? "kotz" : "gaussian";
    r["grade"] = to_string(row.grade);
    j["rows"].push_back(r);
  }
  return j.dump(2) + "\n";
}

std::string profile_text(const ProfileTable& table) {
  const auto m = table.gaussian.estimates.xi.rows();
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"s", "beta"};
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) header.push_back("alpha" + std::to_string(i + 1) + std::to_string(j + 1));
  }
  header.insert(header.end(), {"r", "q", "BIC*G-BIC*K"});
  cells.push_back(header);

  auto param_cells = [](const FitResult& f) {
    std::vector<std::string> c{short_num(f.estimates.beta)};
    const RealVector xi = upper_triangle(f.estimates.xi);
    for (Eigen::Index i = 0; i < xi.size(); ++i) c.push_back(short_num(xi(i)));
    return c;
  };
  std::vector<std::string> base{"gaussian"};
  for (auto& c : param_cells(table.gaussian)) base.push_back(c);
  base.insert(base.end(), {"-", "-", "-"});
  cells.push_back(base);
  for (const auto& row : table.rows) {
    std::vector<std::string> r{short_num(row.s)};
    for (auto& c : param_cells(row.kotz)) r.push_back(c);
    r.insert(r.end(), {short_num(row.kotz.estimates.r), short_num(row.kotz.estimates.q),
                       short_num(row.bic_diff)});
    cells.push_back(r);
  }

  std::ostringstream out;
  out << "n = " << table.n << ", K = " << table.gaussian.sample_size
      << ", BIC* = -2 loglik + n_p (ln(K+2) - ln 24), n_p gaussian = " << table.gaussian.n_params;
  if (!table.rows.empty()) out << ", kotz = " << table.rows.front().kotz.n_params;
  out << ", convention " << to_string(table.gaussian.convention) << "\n\n";
  out << render_table(cells) << "\n";

  std::vector<std::vector<std::string>> grades{{"s", "grade", "favors", "converged"}};
  for (const auto& row : table.rows) {
    grades.push_back({short_num(row.s), to_string(row.grade), row.bic_diff >= 0 ? "kotz" : "gaussian",
                      row.kotz.converged ? "yes" : "no"});
  }
  out << render_table(grades);
  out << "gaussian baseline converged: " << (table.gaussian.converged ? "yes" : "no") << "\n";
  return out.str();
}

}  // namespace gbs
