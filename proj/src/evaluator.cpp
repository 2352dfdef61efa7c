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
#include "rsgrape/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rsgrape/parallel.hpp"

namespace rsgrape {

double CdfTable::quantile(double p) const {
  if (values.empty()) throw std::invalid_argument("quantile: empty table");
  if (p <= 0.0) return values.front();
  const auto rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(n)));
  return values[std::min(rank == 0 ? 0 : rank - 1, n - 1)];
}

CdfTable infidelity_cdf(const SystemModel &model, const ComplexMatrix &target,
                        const ControlSchedule &schedule,
                        const SampleStream &stream, std::size_t n,
                        InfidelityVariant variant, int threads) {
  if (n < 1) throw std::invalid_argument("infidelity_cdf: n must be >= 1");
  const std::vector<UncertaintySample> samples = draw_eval_set(stream, n);
  std::vector<double> losses(n);
  parallel_for(n, threads, [&](std::size_t i) {
    losses[i] =
        sample_infidelity(model, schedule, samples[i], target, variant);
  });
  std::sort(losses.begin(), losses.end());
  CdfTable table;
  table.values = std::move(losses);
  table.n = n;
  table.cum_probs.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    table.cum_probs[i] =
        static_cast<double>(i + 1) / static_cast<double>(n);
  return table;
}

double DiversityHistogram::density(std::size_t bin) const {
  const double width = bin_edges[bin + 1] - bin_edges[bin];
  return static_cast<double>(counts[bin]) /
         (static_cast<double>(n_batches) * width);
}

namespace {

template <typename WeightsOf>
DiversityHistogram diversity_histogram(
    const SystemModel &model, const ComplexMatrix &target,
    const ControlSchedule &schedule, const SampleStream &stream,
    std::size_t n_batches, std::size_t batch_size, InfidelityVariant variant,
    int threads, std::size_t bins, WeightsOf &&weights_of) {
  if (n_batches < 1 || batch_size < 2 || bins < 1)
    throw std::invalid_argument("diversity_pdf: bad sizes");
  const double d_max = 1.0 - 1.0 / static_cast<double>(batch_size);

  std::vector<double> degrees(n_batches);
  parallel_for(n_batches, threads, [&](std::size_t b) {
    const UncertaintyBatch batch =
        draw_batch(stream, static_cast<std::uint64_t>(b + 1), batch_size);
    RealVector losses(static_cast<Eigen::Index>(batch_size));
    for (std::size_t i = 0; i < batch_size; ++i)
      losses(static_cast<Eigen::Index>(i)) =
          sample_infidelity(model, schedule, batch[i], target, variant);
    degrees[b] = diversity_degree(weights_of(losses));
  });

  DiversityHistogram hist;
  hist.n_batches = n_batches;
  hist.batch_size = batch_size;
  hist.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    hist.bin_edges[i] = d_max * static_cast<double>(i) /
                        static_cast<double>(bins);
  hist.counts.assign(bins, 0);
  const double width = d_max / static_cast<double>(bins);
  for (double d : degrees) {
    auto bin = static_cast<std::size_t>(std::floor(d / width));
    hist.counts[std::min(bin, bins - 1)] += 1;
  }
  return hist;
}

}  // namespace

DiversityHistogram diversity_pdf(const SystemModel &model,
                                 const ComplexMatrix &target,
                                 const ControlSchedule &schedule,
                                 const SampleStream &stream,
                                 const UtilitySpec &utility,
                                 std::size_t n_batches, std::size_t batch_size,
                                 InfidelityVariant variant, int threads,
                                 std::size_t bins) {
  return diversity_histogram(model, target, schedule, stream, n_batches,
                             batch_size, variant, threads, bins,
                             [&](const RealVector &losses) {
                               return batch_weights(losses, utility).weights;
                             });
}

DiversityHistogram diversity_pdf_adaptive(
    const SystemModel &model, const ComplexMatrix &target,
    const ControlSchedule &schedule, const SampleStream &stream, double r_star,
    UtilityFamily family, std::size_t n_batches, std::size_t batch_size,
    InfidelityVariant variant, int threads, std::size_t bins) {
  return diversity_histogram(
      model, target, schedule, stream, n_batches, batch_size, variant,
      threads, bins, [&](const RealVector &losses) {
        const double mu = solve_sensitivity(losses, r_star, family).mu;
        return batch_weights(losses, UtilitySpec{family, mu}).weights;
      });
}

double LandscapeGrid::max_value() const { return infidelity.maxCoeff(); }

std::pair<std::size_t, std::size_t> LandscapeGrid::argmax() const {
  Eigen::Index row = 0, col = 0;
  infidelity.maxCoeff(&row, &col);
  return {static_cast<std::size_t>(row), static_cast<std::size_t>(col)};
}

LandscapeGrid landscape_scan(const SystemModel &model,
                             const ComplexMatrix &target,
                             const ControlSchedule &schedule,
                             const GridSpec &grid, InfidelityVariant variant,
                             int threads) {
  if (model.uncertainty_dimension() != 2)
    throw std::invalid_argument(
        "landscape_scan: model must have exactly 2 uncertainty dimensions");
  if (grid.n1 < 1 || grid.n2 < 1)
    throw std::invalid_argument("landscape_scan: empty grid");

  auto axis = [](std::size_t n, double lo, double hi) {
    std::vector<double> points(n);
    if (n == 1) {
      points[0] = 0.5 * (lo + hi);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        points[i] = lo + (hi - lo) * static_cast<double>(i) /
                             static_cast<double>(n - 1);
    }
    return points;
  };

  LandscapeGrid result;
  result.eps1 = axis(grid.n1, grid.lo1, grid.hi1);
  result.eps2 = axis(grid.n2, grid.lo2, grid.hi2);
  result.infidelity.resize(static_cast<Eigen::Index>(grid.n1),
                           static_cast<Eigen::Index>(grid.n2));
  parallel_for(grid.n1 * grid.n2, threads, [&](std::size_t flat) {
    const std::size_t i = flat / grid.n2;
    const std::size_t j = flat % grid.n2;
    UncertaintySample sample(2);
    sample << result.eps1[i], result.eps2[j];
    result.infidelity(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(j)) =
        sample_infidelity(model, schedule, sample, target, variant);
  });
  return result;
}

}  // namespace rsgrape
