#include "gbs/elliptic.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"

namespace gbs {

KernelSpec KernelSpec::gaussian(int n, int m) {
  KernelSpec k;
  k.family = KernelFamily::Gaussian;
  k.n = n;
  k.m = m;
  k.validate();
  return k;
}

KernelSpec KernelSpec::kotz(double q, double r, double s, int n, int m) {
  KernelSpec k;
  k.family = KernelFamily::Kotz;
  k.q = q;
  k.r = r;
  k.s = s;
  k.n = n;
  k.m = m;
  k.validate();
  return k;
}

KernelSpec KernelSpec::with_dims(int n_, int m_) const {
  KernelSpec k = *this;
  k.n = n_;
  k.m = m_;
  k.validate();
  return k;
}

double KernelSpec::radial_shape() const {
  if (family == KernelFamily::Gaussian) return dim() / 2.0;
  return (2 * q + dim() - 2) / (2 * s);
}

void KernelSpec::validate() const {
  if (n < 1 || m < 1) throw Error(ErrorKind::DomainError, "kernel dimensions must be positive");
  if (family == KernelFamily::Gaussian) return;
  if (!std::isfinite(q) || !std::isfinite(r) || !std::isfinite(s)) {
    throw Error(ErrorKind::DomainError, "Kotz parameters must be finite");
  }
  if (!(r > 0)) throw Error(ErrorKind::DomainError, "Kotz r must be > 0");
  if (!(s > 0)) throw Error(ErrorKind::DomainError, "Kotz s must be > 0");
  if (!(2 * q + dim() > 2)) throw Error(ErrorKind::DomainError, "Kotz needs 2q + mn > 2");
}

double log_h(const KernelSpec& kernel, double u) {
  if (!(u >= 0)) throw Error(ErrorKind::DomainError, "log_h argument must be >= 0");
  const double d = kernel.dim();
  if (kernel.family == KernelFamily::Gaussian) {
    return -d / 2 * std::log(2 * std::numbers::pi) - u / 2;
  }
  kernel.validate();
  const double q = kernel.q, r = kernel.r, s = kernel.s;
  const double shape = kernel.radial_shape();
  const double log_const = std::log(s) + shape * std::log(r) + log_gamma(d / 2) -
                           d / 2 * std::log(std::numbers::pi) - log_gamma(shape);
  if (std::isinf(u)) return -std::numeric_limits<double>::infinity();
  if (u == 0 && q != 1) {
    if (q > 1) return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::Singular, "Kotz kernel with q < 1 is unbounded at u = 0");
  }
  const double power_term = q == 1 ? 0.0 : (q - 1) * std::log(u);
  return log_const + power_term - r * std::pow(u, s);
}

RngState::RngState(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

RngState RngState::split(std::uint64_t child) const {
  // Child streams hash (stream, child) so nested splits do not collide.
  const std::uint64_t mixed = (stream_ + 1) * 0x9E3779B97F4A7C15ULL ^ (child + 0xD1B54A32D192ED03ULL);
  return RngState(seed_, mixed);
}

double RngState::normal() { return normal_(engine_); }

double RngState::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngState::gamma(double shape) {
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

RealMatrix sample_symmetric(const KernelSpec& kernel, RngState& rng) {
  kernel.validate();
  RealMatrix z(kernel.n, kernel.m);
  // Column-major fill matches vec(Z).
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  if (kernel.family == KernelFamily::Gaussian) return z;

  // Z = R U: U uniform on the sphere, r R^{2s} ~ Gamma(radial_shape, 1).
  const double norm = z.norm();
  const double w = rng.gamma(kernel.radial_shape());
  const double radius = std::pow(w / kernel.r, 1.0 / (2 * kernel.s));
  return z * (radius / norm);
}

std::string kernel_to_json(const KernelSpec& kernel) {
  nlohmann::json j;
  if (kernel.family == KernelFamily::Gaussian) {
    j["family"] = "gaussian";
  } else {
    j["family"] = "kotz";
    j["q"] = kernel.q;
    j["r"] = kernel.r;
    j["s"] = kernel.s;
  }
  return j.dump();
}

KernelSpec kernel_from_json(std::string_view text, int n, int m) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataFormat, std::string("kernel JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string()) {
    throw Error(ErrorKind::DataFormat, "kernel JSON needs a string \"family\" field");
  }
  const auto family = j["family"].get<std::string>();
  if (family == "gaussian") return KernelSpec::gaussian(n, m);
  if (family == "kotz") {
    for (const char* key : {"q", "r", "s"}) {
      if (!j.contains(key) || !j[key].is_number()) {
        throw Error(ErrorKind::DataFormat, std::string("kotz kernel JSON needs numeric \"") + key + "\"");
      }
    }
    return KernelSpec::kotz(j["q"].get<double>(), j["r"].get<double>(), j["s"].get<double>(), n, m);
  }
  throw Error(ErrorKind::DataFormat, "unknown kernel family \"" + family + "\"");
}

}  // namespace gbs
