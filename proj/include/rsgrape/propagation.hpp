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

#include <vector>

#include "rsgrape/linalg.hpp"

namespace rsgrape {

/// Product structure of a piecewise-constant propagator chain
/// U_total = U_K ... U_1 with U_j = exp(-i * H_j * dt).
///
/// forward[j]  = U_j ... U_1   (forward[0] = I)
/// backward[j] = U_K ... U_{j+1} (backward[K] = I)
/// so that dU_total/dH_j factors as backward[j] * dU_j * forward[j-1].
struct ChainPropagation {
  std::vector<ComplexMatrix> slice_propagators;  // [j-1] holds U_j
  std::vector<ComplexMatrix> forward;            // K+1 entries
  std::vector<ComplexMatrix> backward;           // K+1 entries

  const ComplexMatrix &total() const { return forward.back(); }
};

ChainPropagation propagate_chain(const std::vector<ComplexMatrix> &generators,
                                 double dt);

/// Same product structure from precomputed slice decompositions.
ChainPropagation propagate_chain_cached(
    const std::vector<SpectralCache> &caches, double dt);

}  // namespace rsgrape
