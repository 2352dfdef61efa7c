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
#include "rsgrape/propagation.hpp"

#include <stdexcept>

namespace rsgrape {

ChainPropagation propagate_chain_cached(
    const std::vector<SpectralCache> &caches, double dt) {
  if (caches.empty())
    throw std::invalid_argument("propagate_chain: empty generator chain");
  const std::size_t k = caches.size();
  const Eigen::Index n = caches.front().dim();

  ChainPropagation chain;
  chain.slice_propagators.reserve(k);
  for (const auto &cache : caches) {
    if (cache.dim() != n)
      throw std::invalid_argument("propagate_chain: mixed dimensions");
    chain.slice_propagators.push_back(expm_from_spectrum(cache, dt));
  }

  chain.forward.resize(k + 1);
  chain.forward[0] = ComplexMatrix::Identity(n, n);
  for (std::size_t j = 1; j <= k; ++j)
    chain.forward[j] = chain.slice_propagators[j - 1] * chain.forward[j - 1];

  chain.backward.resize(k + 1);
  chain.backward[k] = ComplexMatrix::Identity(n, n);
  for (std::size_t j = k; j-- > 0;)
    chain.backward[j] = chain.backward[j + 1] * chain.slice_propagators[j];

  return chain;
}

ChainPropagation propagate_chain(const std::vector<ComplexMatrix> &generators,
                                 double dt) {
  if (generators.empty())
    throw std::invalid_argument("propagate_chain: empty generator chain");
  std::vector<SpectralCache> caches;
  caches.reserve(generators.size());
  for (const auto &h : generators) caches.push_back(spectral_decompose(h));
  return propagate_chain_cached(caches, dt);
}

}  // namespace rsgrape
