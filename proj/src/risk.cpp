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
#include "rsgrape/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rsgrape/errors.hpp"
#include "rsgrape/parallel.hpp"
#include "rsgrape/propagation.hpp"

namespace rsgrape {

namespace {

constexpr Complex kImag{0.0, 1.0};

// HARA derivatives at L = 0 are regularized by clamping the loss to the
// smallest positive normal-ish value; this preserves the weight ordering.
constexpr double kHaraFloor = 1e-300;

double overlap_trace_real(const ComplexMatrix &target,
                          const ComplexMatrix &u) {
  // Re tr(U_f^dag U)
  return (target.conjugate().cwiseProduct(u)).sum().real();
}

Complex overlap_trace(const ComplexMatrix &target, const ComplexMatrix &u) {
  return (target.conjugate().cwiseProduct(u)).sum();
}

double loss_from_overlap(Complex z, Eigen::Index n,
                         InfidelityVariant variant) {
  const double dim = static_cast<double>(n);
  double loss;
  switch (variant) {
    case InfidelityVariant::PhaseSensitive:
      loss = (2.0 * dim - 2.0 * z.real()) / (dim * dim);
      break;
    case InfidelityVariant::PhaseInsensitive:
      loss = 1.0 - std::norm(z) / (dim * dim);
      break;
    default:
      loss = 0.0;
  }
  return std::max(loss, 0.0);  // clip the rounding fuzz below zero
}

}  // namespace

double loss_upper_bound(InfidelityVariant variant, Eigen::Index dim) {
  return variant == InfidelityVariant::PhaseSensitive
             ? 4.0 / static_cast<double>(dim)
             : 1.0;
}

double infidelity(const ComplexMatrix &u, const ComplexMatrix &target,
                  InfidelityVariant variant) {
  if (u.rows() != target.rows() || u.cols() != target.cols())
    throw std::invalid_argument("infidelity: dimension mismatch");
  return loss_from_overlap(overlap_trace(target, u), u.rows(), variant);
}

double sample_infidelity(const SystemModel &model,
                         const ControlSchedule &schedule,
                         const UncertaintySample &sample,
                         const ComplexMatrix &target,
                         InfidelityVariant variant) {
  const Eigen::Index k = schedule.slices();
  const double dt = schedule.dt();
  ComplexMatrix u = ComplexMatrix::Identity(model.dim, model.dim);
  for (Eigen::Index j = 1; j <= k; ++j) {
    const SpectralCache cache =
        spectral_decompose(slice_hamiltonian(model, schedule, j, sample));
    u = expm_from_spectrum(cache, dt) * u;
  }
  return loss_from_overlap(overlap_trace(target, u), model.dim, variant);
}

SampleEvaluation evaluate_sample(const SystemModel &model,
                                 const ControlSchedule &schedule,
                                 const UncertaintySample &sample,
                                 const ComplexMatrix &target,
                                 InfidelityVariant variant) {
  const Eigen::Index n = model.dim;
  const Eigen::Index channels = schedule.channels();
  const Eigen::Index k = schedule.slices();
  const double dt = schedule.dt();
  const double dim = static_cast<double>(n);

  std::vector<SpectralCache> caches;
  caches.reserve(k);
  std::vector<ComplexMatrix> props;
  props.reserve(k);
  std::vector<ComplexMatrix> forward;  // forward[j] = U_j ... U_1
  forward.reserve(k + 1);
  forward.push_back(ComplexMatrix::Identity(n, n));
  for (Eigen::Index j = 1; j <= k; ++j) {
    caches.push_back(
        spectral_decompose(slice_hamiltonian(model, schedule, j, sample)));
    props.push_back(expm_from_spectrum(caches.back(), dt));
    forward.push_back(props.back() * forward.back());
  }

  const Complex z = overlap_trace(target, forward.back());

  SampleEvaluation result;
  result.loss = loss_from_overlap(z, n, variant);
  result.gradient = RealMatrix::Zero(channels, k);

  // Sweep backwards keeping F_j = U_f^dag * U_K ... U_{j+1}; the trace of the
  // derivative of the full product against the target reduces per slice to a
  // bilinear contraction of each control generator with one cached matrix G.
  ComplexMatrix f = target.adjoint();
  for (Eigen::Index j = k; j >= 1; --j) {
    const SpectralCache &cache = caches[j - 1];
    const ComplexMatrix e = forward[j - 1] * f;  // X_{j-1} U_f^dag P_j
    const ComplexMatrix e_eig =
        cache.eigenvectors.adjoint() * e * cache.eigenvectors;
    const ComplexMatrix table =
        phase_divided_differences(cache.eigenvalues, dt);
    const ComplexMatrix m = table.cwiseProduct(e_eig.transpose());
    const ComplexMatrix g =
        cache.eigenvectors.conjugate() * m * cache.eigenvectors.transpose();
    for (Eigen::Index c = 0; c < channels; ++c) {
      // dz/du_{c,j} = tr(U_f^dag P_j dU_j X_{j-1}) = sum_pq (H_c)_pq G_pq
      const Complex dz = model.control_terms[c].cwiseProduct(g).sum();
      double dl;
      if (variant == InfidelityVariant::PhaseSensitive)
        dl = -2.0 / (dim * dim) * dz.real();
      else
        dl = -2.0 / (dim * dim) * (std::conj(z) * dz).real();
      result.gradient(c, j - 1) = dl;
    }
    f = f * props[j - 1];
  }
  return result;
}

RealMatrix infidelity_gradient(const SystemModel &model,
                               const ControlSchedule &schedule,
                               const UncertaintySample &sample,
                               const ComplexMatrix &target,
                               InfidelityVariant variant) {
  return evaluate_sample(model, schedule, sample, target, variant).gradient;
}

void validate(const UtilitySpec &spec) {
  switch (spec.family) {
    case UtilityFamily::Exponential:
      if (!(spec.mu >= 0.0))
        throw std::invalid_argument("utility: exponential needs mu >= 0");
      break;
    case UtilityFamily::Hara:
      if (!(spec.mu >= 1.0))
        throw std::invalid_argument("utility: HARA needs mu >= 1");
      break;
  }
}

double utility_value(double loss, const UtilitySpec &spec) {
  switch (spec.family) {
    case UtilityFamily::Exponential:
      return std::exp(spec.mu * loss);
    case UtilityFamily::Hara:
      return std::pow(std::max(loss, kHaraFloor), spec.mu);
  }
  return 0.0;
}

double utility_derivative(double loss, const UtilitySpec &spec) {
  switch (spec.family) {
    case UtilityFamily::Exponential:
      return spec.mu * std::exp(spec.mu * loss);
    case UtilityFamily::Hara:
      return spec.mu * std::pow(std::max(loss, kHaraFloor), spec.mu - 1.0);
  }
  return 0.0;
}

namespace {

// log V'(L) up to the mu-dependent constant factor shared by the whole batch;
// the normalization cancels everything but these exponents.
double log_weight_exponent(double loss, const UtilitySpec &spec) {
  switch (spec.family) {
    case UtilityFamily::Exponential:
      return spec.mu * loss;
    case UtilityFamily::Hara:
      return (spec.mu - 1.0) * std::log(std::max(loss, kHaraFloor));
  }
  return 0.0;
}

}  // namespace

double empirical_rs_loss(const RealVector &losses, const UtilitySpec &spec) {
  const Eigen::Index m = losses.size();
  if (m < 1) throw std::invalid_argument("empirical_rs_loss: empty batch");
  if (spec.family == UtilityFamily::Exponential) {
    // log-sum-exp keeps moderate mu*L exact and degrades gracefully to inf
    double lmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i)
      lmax = std::max(lmax, spec.mu * losses(i));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      acc += std::exp(spec.mu * losses(i) - lmax);
    return std::exp(lmax + std::log(acc / static_cast<double>(m)));
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) acc += utility_value(losses(i), spec);
  return acc / static_cast<double>(m);
}

BatchWeights batch_weights(const RealVector &losses, const UtilitySpec &spec) {
  const Eigen::Index m = losses.size();
  if (m < 1) throw std::invalid_argument("batch_weights: empty batch");
  if (!losses.allFinite())
    throw NumericalError("batch_weights: non-finite loss in batch");
  validate(spec);

  BatchWeights result;
  result.weights.resize(m);

  if (spec.family == UtilityFamily::Hara) {
    bool all_floored = true;
    for (Eigen::Index i = 0; i < m; ++i)
      if (losses(i) > kHaraFloor) all_floored = false;
    if (all_floored) {
      result.weights.setConstant(1.0 / static_cast<double>(m));
      result.degenerate_uniform = true;
      return result;
    }
  }

  RealVector exponents(m);
  for (Eigen::Index i = 0; i < m; ++i)
    exponents(i) = log_weight_exponent(losses(i), spec);
  const double shift = exponents.maxCoeff();
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    result.weights(i) = std::exp(exponents(i) - shift);
    total += result.weights(i);
  }
  result.weights /= total;
  return result;
}

RealMatrix weighted_gradient(const std::vector<RealMatrix> &gradients,
                             const RealVector &weights) {
  if (gradients.empty())
    throw std::invalid_argument("weighted_gradient: empty batch");
  if (static_cast<Eigen::Index>(gradients.size()) != weights.size())
    throw std::invalid_argument("weighted_gradient: size mismatch");
  RealMatrix sum =
      RealMatrix::Zero(gradients.front().rows(), gradients.front().cols());
  for (std::size_t i = 0; i < gradients.size(); ++i)
    sum.noalias() += weights(static_cast<Eigen::Index>(i)) * gradients[i];
  return sum;
}

double diversity_degree(const RealVector &weights) {
  if (weights.size() < 1)
    throw std::invalid_argument("diversity_degree: empty weights");
  return weights.maxCoeff() - 1.0 / static_cast<double>(weights.size());
}

double max_weight_at(const RealVector &losses, UtilityFamily family,
                     double mu) {
  return batch_weights(losses, UtilitySpec{family, mu}).weights.maxCoeff();
}

SensitivityResult solve_sensitivity(const RealVector &losses, double r_star,
                                    UtilityFamily family) {
  const Eigen::Index m = losses.size();
  if (m < 2) throw std::invalid_argument("solve_sensitivity: needs M >= 2");
  const double uniform = 1.0 / static_cast<double>(m);
  if (r_star < uniform - 1e-12 || r_star > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "solve_sensitivity: r_star " << r_star << " outside [1/M, 1] = ["
        << uniform << ", 1]";
    throw std::invalid_argument(msg.str());
  }

  const double mu_neutral = family == UtilityFamily::Exponential ? 0.0 : 1.0;
  const double spread = losses.maxCoeff() - losses.minCoeff();
  if (spread <= 1e-14) {
    // r(mu) is pinned at 1/M for an equal-loss batch
    SensitivityResult result;
    result.mu = mu_neutral;
    result.max_weight = uniform;
    result.status = r_star > uniform + 1e-9
                        ? SensitivityStatus::DegenerateBatch
                        : SensitivityStatus::Converged;
    return result;
  }

  auto r_of = [&](double mu) { return max_weight_at(losses, family, mu); };

  constexpr double kTolR = 1e-9;
  constexpr double kMuCap = 1e12;

  double lo = mu_neutral;
  double r_lo = r_of(lo);
  if (r_star <= r_lo + kTolR)
    return SensitivityResult{lo, r_lo, SensitivityStatus::Converged};

  double hi = std::max(1.0, 2.0 * mu_neutral);
  double r_hi = r_of(hi);
  while (r_hi < r_star && hi < kMuCap) {
    lo = hi;
    r_lo = r_hi;
    hi = std::min(2.0 * hi, kMuCap);
    r_hi = r_of(hi);
  }
  if (r_hi < r_star - kTolR) {
    // sup_mu r(mu) = 1/(number of tied maxima) can sit below r_star
    return SensitivityResult{hi, r_hi, SensitivityStatus::Unreachable};
  }

  double mu_mid = 0.5 * (lo + hi);
  double r_mid = r_of(mu_mid);
  for (int iter = 0; iter < 300; ++iter) {
    const bool bracket_tight = (hi - lo) <= 1e-10 * std::max(1.0, hi);
    if (bracket_tight && std::abs(r_mid - r_star) <= kTolR) break;
    if (r_mid < r_star)
      lo = mu_mid;
    else
      hi = mu_mid;
    mu_mid = 0.5 * (lo + hi);
    r_mid = r_of(mu_mid);
  }
  return SensitivityResult{mu_mid, r_mid, SensitivityStatus::Converged};
}

SampleSetEvaluation evaluate_samples(const SystemModel &model,
                                     const ControlSchedule &schedule,
                                     const UncertaintyBatch &batch,
                                     const ComplexMatrix &target,
                                     InfidelityVariant variant, int threads,
                                     bool with_gradients) {
  if (batch.empty())
    throw std::invalid_argument("evaluate_samples: empty batch");
  SampleSetEvaluation result;
  result.losses.resize(static_cast<Eigen::Index>(batch.size()));
  if (with_gradients) result.gradients.resize(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    if (with_gradients) {
      SampleEvaluation eval =
          evaluate_sample(model, schedule, batch[i], target, variant);
      result.losses(static_cast<Eigen::Index>(i)) = eval.loss;
      result.gradients[i] = std::move(eval.gradient);
    } else {
      result.losses(static_cast<Eigen::Index>(i)) =
          sample_infidelity(model, schedule, batch[i], target, variant);
    }
  });
  return result;
}

BatchEvaluation evaluate_batch(const SystemModel &model,
                               const ControlSchedule &schedule,
                               const UncertaintyBatch &batch,
                               const ComplexMatrix &target,
                               InfidelityVariant variant,
                               const UtilitySpec &utility, int threads) {
  SampleSetEvaluation samples =
      evaluate_samples(model, schedule, batch, target, variant, threads, true);
  BatchEvaluation result;
  result.losses = std::move(samples.losses);
  result.gradients = std::move(samples.gradients);
  BatchWeights weights = batch_weights(result.losses, utility);
  result.weights = std::move(weights.weights);
  result.degenerate_weights = weights.degenerate_uniform;
  result.mu_used = utility.mu;
  result.rs_loss = empirical_rs_loss(result.losses, utility);
  result.weighted = weighted_gradient(result.gradients, result.weights);
  return result;
}

}  // namespace rsgrape
