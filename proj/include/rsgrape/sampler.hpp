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
#pragma once

#include <cstdint>
#include <vector>

#include "rsgrape/system.hpp"

namespace rsgrape {

using UncertaintyBatch = std::vector<UncertaintySample>;

/// Per-dimension sampling law.
struct DimensionLaw {
  enum class Kind { Uniform, Gaussian } kind = Kind::Uniform;
  double a = 0.0;  // uniform: lo,  gaussian: mean
  double b = 0.0;  // uniform: hi,  gaussian: stddev
};

struct DistributionSpec {
  std::vector<DimensionLaw> dims;

  std::size_t dimension() const { return dims.size(); }
  static DistributionSpec uniform_box(std::size_t dims, double lo, double hi);
};

void validate(const DistributionSpec &spec);

enum class StreamPurpose : std::uint64_t {
  Train = UINT64_C(0x745241494E),
  Eval = UINT64_C(0x4556414C),
};

/// Addressed sample source: the sample at (iteration, index) is a pure
/// function of (master_seed, purpose, iteration, index). Train and eval
/// streams with the same seed never collide.
struct SampleStream {
  DistributionSpec spec;
  std::uint64_t master_seed = 0;
  StreamPurpose purpose = StreamPurpose::Train;
};

/// Sample at explicit stream coordinates.
UncertaintySample sample_at(const SampleStream &stream, std::uint64_t iteration,
                            std::uint64_t index);

/// Mini-batch for one training iteration; identical on replay.
UncertaintyBatch draw_batch(const SampleStream &stream, std::uint64_t iteration,
                            std::size_t batch_size);

/// Flat evaluation set, disjoint from every training batch of the same seed
/// when the stream purpose differs.
std::vector<UncertaintySample> draw_eval_set(const SampleStream &stream,
                                             std::size_t n);

}  // namespace rsgrape
