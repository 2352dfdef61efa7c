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

#include <cstddef>
#include <vector>

#include "rsgrape/risk.hpp"
#include "rsgrape/sampler.hpp"
#include "rsgrape/system.hpp"

namespace rsgrape {

/// Empirical CDF of the gate infidelity over sampled uncertainties.
struct CdfTable {
  std::vector<double> values;     // sorted ascending
  std::vector<double> cum_probs;  // (i+1)/n
  std::size_t n = 0;

  /// Order-statistic quantile: the ceil(p*n)-th smallest value.
  double quantile(double p) const;
};

CdfTable infidelity_cdf(const SystemModel &model, const ComplexMatrix &target,
                        const ControlSchedule &schedule,
                        const SampleStream &stream, std::size_t n,
                        InfidelityVariant variant, int threads = 0);

/// Histogram of the diversity degree d = max_i w_i - 1/M over many batches.
struct DiversityHistogram {
  std::vector<double> bin_edges;   // bins+1 edges over [0, 1-1/M]
  std::vector<std::size_t> counts;
  std::size_t n_batches = 0;
  std::size_t batch_size = 0;

  double density(std::size_t bin) const;
};

DiversityHistogram diversity_pdf(const SystemModel &model,
                                 const ComplexMatrix &target,
                                 const ControlSchedule &schedule,
                                 const SampleStream &stream,
                                 const UtilitySpec &utility,
                                 std::size_t n_batches, std::size_t batch_size,
                                 InfidelityVariant variant, int threads = 0,
                                 std::size_t bins = 100);

/// Diversity histogram with mu re-solved per batch (adaptive weighting);
/// concentrates at r_star - 1/M except on degenerate batches.
DiversityHistogram diversity_pdf_adaptive(
    const SystemModel &model, const ComplexMatrix &target,
    const ControlSchedule &schedule, const SampleStream &stream, double r_star,
    UtilityFamily family, std::size_t n_batches, std::size_t batch_size,
    InfidelityVariant variant, int threads = 0, std::size_t bins = 100);

/// Infidelity over a Cartesian grid of two uncertainty parameters.
struct LandscapeGrid {
  std::vector<double> eps1;  // row axis
  std::vector<double> eps2;  // column axis
  RealMatrix infidelity;     // eps1.size() x eps2.size()

  double max_value() const;
  std::pair<std::size_t, std::size_t> argmax() const;
};

struct GridSpec {
  std::size_t n1 = 41, n2 = 41;
  double lo1 = -0.2, hi1 = 0.2;
  double lo2 = -0.2, hi2 = 0.2;
};

/// Requires a model with exactly two uncertainty dimensions.
LandscapeGrid landscape_scan(const SystemModel &model,
                             const ComplexMatrix &target,
                             const ControlSchedule &schedule,
                             const GridSpec &grid, InfidelityVariant variant,
                             int threads = 0);

}  // namespace rsgrape
