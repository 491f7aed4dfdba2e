#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "gbs/matq.hpp"

namespace gbs {

enum class KernelFamily { Gaussian, Kotz };

/// Elliptical generator h for Z in R^{n x m}. The normalizing constant lives
/// inside h, so exp(log_h(tr Z'Z)) is the density of Z itself.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double q = 1.0;
  double r = 0.5;
  double s = 1.0;
  int n = 1;
  int m = 1;

  static KernelSpec gaussian(int n, int m);
  /// Throws DomainError unless r > 0, s > 0 and 2q + mn > 2.
  static KernelSpec kotz(double q, double r, double s, int n, int m);

  /// Same family and shape parameters, different ambient dimensions.
  KernelSpec with_dims(int n, int m) const;

  int dim() const { return n * m; }
  /// Shape (2q + nm - 2) / (2s) of the Gamma law of r * (tr Z'Z)^s.
  double radial_shape() const;
  void validate() const;
};

/// ln h(u) including the normalizing constant.
double log_h(const KernelSpec& kernel, double u);

/// Generator state: a 64-bit Mersenne twister seeded from (seed, stream).
/// Copies continue identical streams; split() derives independent ones.
class RngState {
 public:
  explicit RngState(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  RngState split(std::uint64_t child) const;

  double normal();
  double uniform();
  double gamma(double shape);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Z ~ E_{n x m}(0, I, h).
RealMatrix sample_symmetric(const KernelSpec& kernel, RngState& rng);

std::string kernel_to_json(const KernelSpec& kernel);
/// Parses {"family":"kotz","q":..,"r":..,"s":..} or {"family":"gaussian"}.
KernelSpec kernel_from_json(std::string_view text, int n, int m);

}  // namespace gbs
