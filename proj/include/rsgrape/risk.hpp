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

#include "rsgrape/sampler.hpp"
#include "rsgrape/system.hpp"

namespace rsgrape {

/// Gate distance between an achieved propagator U and a target U_f.
///   PhaseSensitive:   ||U - U_f||_F^2 / N^2 = (2N - 2 Re tr(U_f^dag U))/N^2,
///                     range [0, 4/N]; penalizes the global phase.
///   PhaseInsensitive: 1 - |tr(U_f^dag U)|^2 / N^2, range [0, 1].
enum class InfidelityVariant { PhaseSensitive, PhaseInsensitive };

double loss_upper_bound(InfidelityVariant variant, Eigen::Index dim);

double infidelity(const ComplexMatrix &u, const ComplexMatrix &target,
                  InfidelityVariant variant);

/// Infidelity of one uncertainty sample under the schedule (no gradient).
double sample_infidelity(const SystemModel &model,
                         const ControlSchedule &schedule,
                         const UncertaintySample &sample,
                         const ComplexMatrix &target,
                         InfidelityVariant variant);

struct SampleEvaluation {
  double loss = 0.0;
  RealMatrix gradient;  // C x K, dL/du_{c,j}
};

/// Loss and its exact control gradient, assembled from the chain's
/// forward/backward partial products and the spectral slice derivatives.
SampleEvaluation evaluate_sample(const SystemModel &model,
                                 const ControlSchedule &schedule,
                                 const UncertaintySample &sample,
                                 const ComplexMatrix &target,
                                 InfidelityVariant variant);

/// dL/du_{c,j} only.
RealMatrix infidelity_gradient(const SystemModel &model,
                               const ControlSchedule &schedule,
                               const UncertaintySample &sample,
                               const ComplexMatrix &target,
                               InfidelityVariant variant);

/// Utility families: Exponential V(L) = exp(mu L), Hara V(L) = L^mu.
/// The weighting is risk-averse for mu > 0 (exponential) or mu > 1 (HARA);
/// the boundary values mu = 0 / mu = 1 give the risk-neutral uniform limit.
enum class UtilityFamily { Exponential, Hara };

struct UtilitySpec {
  UtilityFamily family = UtilityFamily::Exponential;
  double mu = 1.0;
};

void validate(const UtilitySpec &spec);

double utility_value(double loss, const UtilitySpec &spec);
double utility_derivative(double loss, const UtilitySpec &spec);

/// Empirical risk-sensitive loss: mean of V(L_i) over the batch.
double empirical_rs_loss(const RealVector &losses, const UtilitySpec &spec);

struct BatchWeights {
  RealVector weights;
  /// True when every V'(L_i) vanished (e.g. HARA with an all-zero batch)
  /// and the weights fell back to uniform.
  bool degenerate_uniform = false;
};

/// Normalized sample weights w_i = V'(L_i) / sum_j V'(L_j), computed in
/// log-space so extreme sensitivities cannot overflow. Weights are
/// nonnegative and sum to 1.
BatchWeights batch_weights(const RealVector &losses, const UtilitySpec &spec);

/// sum_i w_i * g_i, reduced in ascending sample order for bit reproducibility.
RealMatrix weighted_gradient(const std::vector<RealMatrix> &gradients,
                             const RealVector &weights);

/// max_i w_i - 1/M, in [0, 1 - 1/M]: how concentrated the weighting is.
double diversity_degree(const RealVector &weights);

/// max_i w_i(mu) for the given losses; the monotone map the adaptive
/// sensitivity solver inverts.
double max_weight_at(const RealVector &losses, UtilityFamily family,
                     double mu);

enum class SensitivityStatus { Converged, DegenerateBatch, Unreachable };

struct SensitivityResult {
  double mu = 0.0;
  double max_weight = 0.0;
  SensitivityStatus status = SensitivityStatus::Converged;
};

/// Solves max_i w_i(mu) = r_star for mu by geometric bracket growth plus
/// bisection. Exponential utilities search mu in [0, inf), HARA in [1, inf).
/// A batch with all losses equal (within 1e-14) keeps r(mu) pinned at 1/M:
/// the boundary mu is returned with DegenerateBatch when r_star asks for
/// more. Tied maxima cap sup r(mu) below 1; an unreachable r_star returns
/// the bracket's upper end with Unreachable.
SensitivityResult solve_sensitivity(const RealVector &losses, double r_star,
                                    UtilityFamily family);

/// Losses and (optionally) gradients of every sample in a batch. Sample
/// evaluations run in parallel; outputs are stored per index.
struct SampleSetEvaluation {
  RealVector losses;
  std::vector<RealMatrix> gradients;  // empty when with_gradients = false
};

SampleSetEvaluation evaluate_samples(const SystemModel &model,
                                     const ControlSchedule &schedule,
                                     const UncertaintyBatch &batch,
                                     const ComplexMatrix &target,
                                     InfidelityVariant variant, int threads,
                                     bool with_gradients = true);

/// One batch fully evaluated under a fixed utility.
struct BatchEvaluation {
  RealVector losses;
  std::vector<RealMatrix> gradients;
  RealVector weights;
  double mu_used = 0.0;
  double rs_loss = 0.0;
  RealMatrix weighted;  // C x K
  bool degenerate_weights = false;
};

BatchEvaluation evaluate_batch(const SystemModel &model,
                               const ControlSchedule &schedule,
                               const UncertaintyBatch &batch,
                               const ComplexMatrix &target,
                               InfidelityVariant variant,
                               const UtilitySpec &utility, int threads);

}  // namespace rsgrape
