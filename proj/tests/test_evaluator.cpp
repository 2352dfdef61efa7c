#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "rsgrape/evaluator.hpp"
#include "rsgrape/system.hpp"
#include "test_util.hpp"

using namespace rsgrape;

namespace {

struct Toy {
  SystemModel model;
  ComplexMatrix target;
  ControlSchedule schedule;
  SampleStream stream;

  explicit Toy(std::uint64_t seed = 23) {
    model.dim = 4;
    model.drift_terms.push_back(
        {pauli_string({{1, PauliAxis::Z}, {2, PauliAxis::Z}}, 2), 2.0, 0});
    model.drift_terms.push_back(
        {pauli_string({{2, PauliAxis::Z}}, 2), 1.0, 1});
    model.control_terms.push_back(pauli_string({{1, PauliAxis::X}}, 2));
    model.control_terms.push_back(pauli_string({{1, PauliAxis::Y}}, 2));
    target = pauli_string({{1, PauliAxis::X}}, 2);
    schedule = initial_schedule(seed, 2, 8, 1.0);
    stream = SampleStream{DistributionSpec::uniform_box(2, -0.2, 0.2), seed,
                          StreamPurpose::Eval};
  }
};

const auto kVariant = InfidelityVariant::PhaseInsensitive;

}  // namespace

TEST_CASE("cdf endpoints, monotonicity and determinism") {
  const Toy toy;
  const CdfTable table =
      infidelity_cdf(toy.model, toy.target, toy.schedule, toy.stream, 500,
                     kVariant, 2);
  REQUIRE(table.n == 500);
  CHECK(table.cum_probs.front() == doctest::Approx(1.0 / 500));
  CHECK(table.cum_probs.back() == doctest::Approx(1.0));
  CHECK(std::is_sorted(table.values.begin(), table.values.end()));
  CHECK(std::is_sorted(table.cum_probs.begin(), table.cum_probs.end()));
  for (double v : table.values) {
    CHECK(v >= 0.0);
    CHECK(v <= loss_upper_bound(kVariant, 4));
  }

  const CdfTable again =
      infidelity_cdf(toy.model, toy.target, toy.schedule, toy.stream, 500,
                     kVariant, 1);
  CHECK(table.values == again.values);  // thread count cannot matter
}

TEST_CASE("cdf of a collapsed uncertainty law is a single step") {
  const Toy toy;
  DistributionSpec collapsed;
  collapsed.dims = {DimensionLaw{DimensionLaw::Kind::Uniform, 0.0, 1e-300},
                    DimensionLaw{DimensionLaw::Kind::Uniform, 0.0, 1e-300}};
  const SampleStream stream{collapsed, 1, StreamPurpose::Eval};
  const CdfTable table = infidelity_cdf(toy.model, toy.target, toy.schedule,
                                        stream, 50, kVariant, 1);
  const double nominal = sample_infidelity(
      toy.model, toy.schedule, UncertaintySample::Zero(2), toy.target,
      kVariant);
  CHECK(table.values.front() == doctest::Approx(nominal).epsilon(1e-12));
  CHECK(table.values.back() == doctest::Approx(nominal).epsilon(1e-12));
}

TEST_CASE("cdf quantiles match a brute-force sort") {
  const Toy toy;
  const std::size_t n = 100;
  const CdfTable table = infidelity_cdf(toy.model, toy.target, toy.schedule,
                                        toy.stream, n, kVariant, 2);
  // independent recomputation
  const auto samples = draw_eval_set(toy.stream, n);
  std::vector<double> losses;
  for (const auto &s : samples)
    losses.push_back(
        sample_infidelity(toy.model, toy.schedule, s, toy.target, kVariant));
  std::sort(losses.begin(), losses.end());
  CHECK(table.values == losses);
  CHECK(table.quantile(0.5) == losses[49]);
  CHECK(table.quantile(0.99) == losses[98]);
  CHECK(table.quantile(1.0) == losses[99]);
  CHECK(table.quantile(0.0) == losses[0]);
}

TEST_CASE("subsampled median sits inside the big set's quantile band") {
  const Toy toy;
  const CdfTable small = infidelity_cdf(toy.model, toy.target, toy.schedule,
                                        toy.stream, 400, kVariant, 2);
  SampleStream other = toy.stream;
  other.master_seed += 1;
  const CdfTable big = infidelity_cdf(toy.model, toy.target, toy.schedule,
                                      other, 8000, kVariant, 2);
  // binomial CI: median of n=400 lies within p = 0.5 +- 3.2/sqrt(400)
  CHECK(small.quantile(0.5) >= big.quantile(0.5 - 0.16));
  CHECK(small.quantile(0.5) <= big.quantile(0.5 + 0.16));
}

TEST_CASE("diversity histogram limits") {
  const Toy toy;

  SUBCASE("risk-neutral weights put all mass in the lowest bin") {
    const DiversityHistogram hist = diversity_pdf(
        toy.model, toy.target, toy.schedule, toy.stream,
        {UtilityFamily::Exponential, 1e-9}, 200, 5, kVariant, 2, 20);
    CHECK(hist.counts[0] == 200);
  }

  SUBCASE("extreme sensitivity concentrates near 1 - 1/M") {
    const DiversityHistogram hist = diversity_pdf(
        toy.model, toy.target, toy.schedule, toy.stream,
        {UtilityFamily::Exponential, 1e7}, 200, 5, kVariant, 2, 20);
    CHECK(hist.counts.back() == 200);
  }
}

TEST_CASE("diversity histogram equals batch-by-batch recomputation") {
  const Toy toy;
  const UtilitySpec spec{UtilityFamily::Exponential, 100.0};
  const std::size_t n_batches = 200, m = 6, bins = 25;
  const DiversityHistogram hist =
      diversity_pdf(toy.model, toy.target, toy.schedule, toy.stream, spec,
                    n_batches, m, kVariant, 2, bins);

  std::vector<std::size_t> expected(bins, 0);
  const double d_max = 1.0 - 1.0 / static_cast<double>(m);
  for (std::size_t b = 1; b <= n_batches; ++b) {
    const UncertaintyBatch batch = draw_batch(toy.stream, b, m);
    RealVector losses(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
      losses(static_cast<Eigen::Index>(i)) = sample_infidelity(
          toy.model, toy.schedule, batch[i], toy.target, kVariant);
    const double d = diversity_degree(batch_weights(losses, spec).weights);
    auto bin = static_cast<std::size_t>(std::floor(d / (d_max / bins)));
    expected[std::min(bin, bins - 1)] += 1;
  }
  CHECK(hist.counts == expected);

  std::size_t total = 0;
  for (auto c : hist.counts) total += c;
  CHECK(total == n_batches);

  double integral = 0.0;
  for (std::size_t bin = 0; bin < bins; ++bin)
    integral += hist.density(bin) * (hist.bin_edges[bin + 1] -
                                     hist.bin_edges[bin]);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adaptive diversity concentrates at r_star - 1/M") {
  const Toy toy;
  const DiversityHistogram hist = diversity_pdf_adaptive(
      toy.model, toy.target, toy.schedule, toy.stream, 0.5,
      UtilityFamily::Exponential, 100, 4, kVariant, 2, 30);
  // d = 0.5 - 0.25 = 0.25 for every non-degenerate batch; the solver's
  // 1e-9 tolerance can straddle the bin edge at exactly 0.25
  const double d_max = 0.75;
  const auto bin = static_cast<std::size_t>(0.25 / (d_max / 30));
  std::size_t near = hist.counts[bin];
  if (bin > 0) near += hist.counts[bin - 1];
  if (bin + 1 < hist.counts.size()) near += hist.counts[bin + 1];
  CHECK(near == 100);
}

TEST_CASE("landscape scan equals pointwise recomputation") {
  const Toy toy;
  GridSpec grid;
  grid.n1 = 3;
  grid.n2 = 4;
  grid.lo1 = -0.2;
  grid.hi1 = 0.2;
  grid.lo2 = -0.1;
  grid.hi2 = 0.15;
  const LandscapeGrid scan = landscape_scan(toy.model, toy.target,
                                            toy.schedule, grid, kVariant, 2);
  REQUIRE(scan.eps1.size() == 3);
  REQUIRE(scan.eps2.size() == 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      UncertaintySample s(2);
      s << scan.eps1[i], scan.eps2[j];
      CHECK(scan.infidelity(static_cast<Eigen::Index>(i),
                            static_cast<Eigen::Index>(j)) ==
            sample_infidelity(toy.model, toy.schedule, s, toy.target,
                              kVariant));
    }
  const auto [ai, aj] = scan.argmax();
  CHECK(scan.infidelity(static_cast<Eigen::Index>(ai),
                        static_cast<Eigen::Index>(aj)) == scan.max_value());
}

TEST_CASE("single-point grid reproduces the nominal infidelity") {
  const Toy toy;
  GridSpec grid;
  grid.n1 = grid.n2 = 1;
  grid.lo1 = grid.hi1 = grid.lo2 = grid.hi2 = 0.0;
  const LandscapeGrid scan = landscape_scan(toy.model, toy.target,
                                            toy.schedule, grid, kVariant, 1);
  const double nominal = sample_infidelity(
      toy.model, toy.schedule, UncertaintySample::Zero(2), toy.target,
      kVariant);
  CHECK(scan.infidelity(0, 0) == doctest::Approx(nominal).epsilon(1e-14));
}

TEST_CASE("landscape scan rejects models without two uncertainty axes") {
  Toy toy;
  toy.model.drift_terms.pop_back();  // now only one uncertainty index
  GridSpec grid;
  CHECK_THROWS_AS(landscape_scan(toy.model, toy.target, toy.schedule, grid,
                                 kVariant, 1),
                  std::invalid_argument);
}

TEST_CASE("zero-control drift propagator spectrum is swap-symmetric") {
  // the ZZ-only preset drift at (e1, e2) and (e2, e1) must have identical
  // propagator spectra when the couplings are equal
  const SystemModel model = three_qubit_preset();
  const ControlSchedule zero = ControlSchedule::zeros(6, 1, 1.0);
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> unif(-0.2, 0.2);
  for (int rep = 0; rep < 10; ++rep) {
    UncertaintySample e(2), swapped(2);
    const double a = unif(rng), b = unif(rng);
    e << a, b;
    swapped << b, a;
    const ComplexMatrix ha = slice_hamiltonian(model, zero, 1, e);
    const ComplexMatrix hb = slice_hamiltonian(model, zero, 1, swapped);
    const RealVector sa = spectral_decompose(ha).eigenvalues;
    const RealVector sb = spectral_decompose(hb).eigenvalues;
    CHECK((sa - sb).cwiseAbs().maxCoeff() <= 1e-10);
    // same spectra carry over to the propagators
    const ComplexMatrix ua = expm_hermitian_generator(ha, 1.0);
    const ComplexMatrix ub = expm_hermitian_generator(hb, 1.0);
    CHECK(std::abs(std::abs(ua.trace()) - std::abs(ub.trace())) <= 1e-10);
  }
}

TEST_CASE("evaluation does not mutate the schedule") {
  const Toy toy;
  const RealMatrix before = toy.schedule.amplitudes;
  infidelity_cdf(toy.model, toy.target, toy.schedule, toy.stream, 50,
                 kVariant, 2);
  GridSpec grid;
  grid.n1 = grid.n2 = 3;
  landscape_scan(toy.model, toy.target, toy.schedule, grid, kVariant, 2);
  CHECK(toy.schedule.amplitudes == before);
}
