/* Copyright 2026 The rsgrape Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "rsgrape/sampler.hpp"

#include <stdexcept>

#include "rsgrape/rng.hpp"

namespace rsgrape {

DistributionSpec DistributionSpec::uniform_box(std::size_t dims, double lo,
                                               double hi) {
  DistributionSpec spec;
  spec.dims.assign(dims, DimensionLaw{DimensionLaw::Kind::Uniform, lo, hi});
  validate(spec);
  return spec;
}

void validate(const DistributionSpec &spec) {
  if (spec.dims.empty())
    throw std::invalid_argument("distribution: no dimensions declared");
  for (const auto &law : spec.dims) {
    switch (law.kind) {
      case DimensionLaw::Kind::Uniform:
        if (!(law.a < law.b))
          throw std::invalid_argument("distribution: uniform needs lo < hi");
        break;
      case DimensionLaw::Kind::Gaussian:
        if (!(law.b > 0.0))
          throw std::invalid_argument(
              "distribution: gaussian needs stddev > 0");
        break;
    }
  }
}

UncertaintySample sample_at(const SampleStream &stream, std::uint64_t iteration,
                            std::uint64_t index) {
  const auto tag = static_cast<std::uint64_t>(stream.purpose);
  const std::size_t d = stream.spec.dimension();
  UncertaintySample sample(static_cast<Eigen::Index>(d));
  for (std::size_t dim = 0; dim < d; ++dim) {
    const auto &law = stream.spec.dims[dim];
    switch (law.kind) {
      case DimensionLaw::Kind::Uniform:
        sample(static_cast<Eigen::Index>(dim)) = rng::uniform(
            rng::word_at(stream.master_seed, tag, iteration, index, dim, 0),
            law.a, law.b);
        break;
      case DimensionLaw::Kind::Gaussian:
        sample(static_cast<Eigen::Index>(dim)) = rng::gaussian(
            rng::word_at(stream.master_seed, tag, iteration, index, dim, 0),
            rng::word_at(stream.master_seed, tag, iteration, index, dim, 1),
            law.a, law.b);
        break;
    }
  }
  return sample;
}

UncertaintyBatch draw_batch(const SampleStream &stream, std::uint64_t iteration,
                            std::size_t batch_size) {
  if (batch_size < 1)
    throw std::invalid_argument("draw_batch: batch_size must be >= 1");
  UncertaintyBatch batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    batch.push_back(sample_at(stream, iteration, i));
  return batch;
}

std::vector<UncertaintySample> draw_eval_set(const SampleStream &stream,
                                             std::size_t n) {
  if (n < 1) throw std::invalid_argument("draw_eval_set: n must be >= 1");
  std::vector<UncertaintySample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    samples.push_back(sample_at(stream, 0, i));
  return samples;
}

}  // namespace rsgrape
