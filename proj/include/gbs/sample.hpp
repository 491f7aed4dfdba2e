#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gbs/elliptic.hpp"
#include "gbs/transform.hpp"

namespace gbs {

struct SampleProvenance {
  GbsParams params;
  KernelSpec kernel;
  std::uint64_t seed = 0;
};

/// K observed SPD m x m matrices.
struct SampleBatch {
  int m = 0;
  std::vector<RealMatrix> matrices;
  std::optional<SampleProvenance> provenance;

  std::size_t count() const { return matrices.size(); }
  /// Throws NotSpd naming the first offending index.
  void validate() const;
};

/// Draws Z ~ E(0, I, h) and maps it through the branch inverse, so every
/// singular value of V Delta^{-1} is >= 1.
RealMatrix sample_V(const GbsParams& params, const KernelSpec& kernel, RngState& rng);

/// T = V'V for V from sample_V.
RealMatrix sample_T(const GbsParams& params, const KernelSpec& kernel, RngState& rng);

/// K independent draws of T; draw k uses the child stream rng.split(k).
SampleBatch sample_batch(const GbsParams& params, const KernelSpec& kernel, int count,
                         const RngState& rng);

}  // namespace gbs
