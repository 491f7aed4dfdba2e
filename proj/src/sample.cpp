#include "gbs/sample.hpp"

#include <string>

namespace gbs {

void SampleBatch::validate() const {
  if (matrices.empty()) throw Error(ErrorKind::DomainError, "sample batch is empty");
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const auto& t = matrices[k];
    if (t.rows() != m || t.cols() != m) {
      throw Error(ErrorKind::DataFormat, "sample " + std::to_string(k) + " is not m x m");
    }
    try {
      require_spd(t, "sample");
    } catch (const Error& e) {
      throw Error(ErrorKind::NotSpd, "sample " + std::to_string(k) + ": " + e.what());
    }
  }
}

RealMatrix sample_V(const GbsParams& params, const KernelSpec& kernel, RngState& rng) {
  const auto k = kernel.with_dims(params.n(), params.m());
  return inverse_map_branch(sample_symmetric(k, rng), params);
}

RealMatrix sample_T(const GbsParams& params, const KernelSpec& kernel, RngState& rng) {
  const RealMatrix v = sample_V(params, kernel, rng);
  RealMatrix t = v.transpose() * v;
  return (t + t.transpose()) / 2;
}

SampleBatch sample_batch(const GbsParams& params, const KernelSpec& kernel, int count,
                         const RngState& rng) {
  if (count < 1) throw Error(ErrorKind::DomainError, "sample count must be >= 1");
  SampleBatch batch;
  batch.m = params.m();
  batch.matrices.reserve(count);
  for (int k = 0; k < count; ++k) {
    RngState child = rng.split(static_cast<std::uint64_t>(k));
    batch.matrices.push_back(sample_T(params, kernel, child));
  }
  batch.provenance = SampleProvenance{params, kernel.with_dims(params.n(), params.m()), rng.seed()};
  return batch;
}

}  // namespace gbs
