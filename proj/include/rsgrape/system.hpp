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
#include <optional>
#include <vector>

#include "rsgrape/linalg.hpp"

namespace rsgrape {

/// A draw of the model's relative parameter deviations.
using UncertaintySample = Eigen::VectorXd;

/// Piecewise-constant control amplitudes (rad/us), channels x slices, over a
/// total duration (us) divided into uniform slices.
struct ControlSchedule {
  RealMatrix amplitudes;  // C x K
  double duration = 0.0;  // us

  Eigen::Index channels() const { return amplitudes.rows(); }
  Eigen::Index slices() const { return amplitudes.cols(); }
  double dt() const { return duration / static_cast<double>(slices()); }

  static ControlSchedule zeros(Eigen::Index channels, Eigen::Index slices,
                               double duration);
};

/// Throws if the schedule has no channels/slices, a non-positive duration,
/// or non-finite amplitudes.
void validate(const ControlSchedule &schedule);

/// One drift contribution: coefficient * (1 + eps[index]) * matrix, or just
/// coefficient * matrix when no uncertainty index is attached.
struct DriftTerm {
  ComplexMatrix matrix;       // Hermitian, N x N
  double coefficient = 0.0;   // rad/us
  std::optional<std::size_t> uncertainty_index;  // 0-based
};

/// H[t; u, eps] = sum_m (1+eps_m) J_m H_m + sum_c u_c(t) H_c on an
/// N-dimensional Hilbert space. Immutable after construction.
struct SystemModel {
  Eigen::Index dim = 0;
  std::vector<DriftTerm> drift_terms;
  std::vector<ComplexMatrix> control_terms;

  Eigen::Index channels() const {
    return static_cast<Eigen::Index>(control_terms.size());
  }
  /// Number of uncertainty dimensions the model references (max index + 1).
  std::size_t uncertainty_dimension() const;
};

void validate(const SystemModel &model);

/// Hamiltonian of one slice (slice_index is 1-based, in [1, K]).
ComplexMatrix slice_hamiltonian(const SystemModel &model,
                                const ControlSchedule &schedule,
                                Eigen::Index slice_index,
                                const UncertaintySample &sample);

enum class FrequencyConvention { Cyclic, Angular };

/// Three qubits coupled in a chain by ZZ terms with uncertain strengths,
/// J12(1+eps1) Z1Z2 + J23(1+eps2) Z2Z3, J12 = J23 = 10 MHz, plus x/y drives
/// on every qubit. Channel order: (u1x, u1y, u2x, u2y, u3x, u3y).
/// Under the cyclic convention the 10 MHz coupling is stored as 2*pi*10
/// rad/us; under the angular convention it is stored as 10 rad/us.
SystemModel three_qubit_preset(
    FrequencyConvention convention = FrequencyConvention::Cyclic);

/// The controlled-controlled-NOT on 8 dimensions: swaps |110> and |111>
/// (qubits 1 and 2 control, qubit 3 target).
ComplexMatrix toffoli_gate();

/// Per channel pair: u_x(t) = A sin(w t + phi), u_y(t) = A cos(w t + phi).
struct SinusoidParams {
  double amplitude = 0.0;  // rad/us
  double frequency = 0.0;  // rad/us
  double phase = 0.0;      // rad
};

/// Samples the sinusoid pair at slice midpoints. params.size() pairs give
/// 2*params.size() channels.
ControlSchedule sinusoidal_schedule(const std::vector<SinusoidParams> &params,
                                    Eigen::Index slices, double duration);

/// Random sinusoidal seed pulse: per pair, A ~ U(0, 2*pi*5) rad/us,
/// w ~ U(0, 2*pi*5) rad/us, phi ~ U(0, 2*pi), all derived from the seed.
/// channels must be even (x/y pairs).
ControlSchedule initial_schedule(std::uint64_t seed, Eigen::Index channels,
                                 Eigen::Index slices, double duration);

}  // namespace rsgrape
