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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rsgrape/risk.hpp"
#include "rsgrape/sampler.hpp"
#include "rsgrape/system.hpp"

namespace rsgrape {

enum class Algorithm { RsFixed, RsAdaptive };
enum class UpdateRule { Adam, Sgd };  // Sgd is a plain-gradient debug mode

struct IterationRecord {
  std::size_t iteration = 0;  // 1-based
  double j_mean = 0.0;        // batch-average infidelity
  double j_max = 0.0;         // batch-worst infidelity
  double mu = 0.0;            // sensitivity used this iteration
  double grad_norm = 0.0;     // Frobenius norm of the weighted gradient
  std::vector<double> losses;   // detail iterations only
  std::vector<double> weights;  // detail iterations only
};

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::RsFixed;
  UtilityFamily family = UtilityFamily::Exponential;
  std::optional<double> mu;      // fixed-sensitivity mode
  std::optional<double> r_star;  // adaptive mode, in [1/M, 1]
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  /// When set, the step size decays geometrically from learning_rate to this
  /// value over max_iterations; constant otherwise.
  std::optional<double> learning_rate_final;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t max_iterations = 10000;
  std::optional<double> target_loss;  // stop when batch J_mean <= target
  std::uint64_t seed = 0;
  UpdateRule update_rule = UpdateRule::Adam;
  int threads = 0;  // 0 = machine default
  /// Batch losses and weights are kept in the trace every detail_stride-th
  /// iteration (1 = every iteration).
  std::size_t detail_stride = 10;
  std::optional<double> amplitude_clip;  // symmetric bound on u, rad/us
  std::size_t checkpoint_stride = 0;     // 0 = only on completion/abort
  std::string checkpoint_path;           // empty = no checkpoints
  /// Runtime-only observer; never serialized, no effect on the trajectory.
  std::function<void(const IterationRecord &)> progress;
};

void validate(const OptimizerConfig &config);

struct AdamState {
  RealMatrix m;  // first moment
  RealMatrix v;  // second moment
  std::size_t step = 0;

  static AdamState zeros(Eigen::Index channels, Eigen::Index slices);
};

/// One bias-corrected Adam step; returns the control delta
/// -alpha * m_hat / (sqrt(v_hat) + eps). Throws NumericalError on a
/// non-finite gradient.
RealMatrix adam_update(AdamState &state, const RealMatrix &gradient,
                       double alpha, double beta1, double beta2, double eps);

struct TrainingTrace {
  std::vector<IterationRecord> records;
  ControlSchedule final_schedule;
  std::size_t iterations_run = 0;
  bool reached_target = false;
  double wall_seconds = 0.0;
};

/// Everything needed to resume a run exactly where it stopped.
struct RunState {
  ControlSchedule schedule;
  AdamState adam;
  std::size_t next_iteration = 1;
  std::uint64_t seed = 0;
};

/// Fixed-sensitivity training: each iteration draws a mini-batch, evaluates
/// per-sample losses and exact gradients, weights them under the fixed-mu
/// utility, and steps the controls along the weighted gradient.
TrainingTrace run_rs_grape(const SystemModel &model,
                           const ComplexMatrix &target,
                           const ControlSchedule &initial,
                           const SampleStream &stream,
                           const OptimizerConfig &config,
                           InfidelityVariant variant);

/// Adaptive-sensitivity training: mu is re-solved every iteration from the
/// current batch losses so that max_i w_i = r_star.
TrainingTrace run_adaptive_rs_grape(const SystemModel &model,
                                    const ComplexMatrix &target,
                                    const ControlSchedule &initial,
                                    const SampleStream &stream,
                                    const OptimizerConfig &config,
                                    InfidelityVariant variant);

/// Continues a checkpointed run; the combined trace equals an uninterrupted
/// run bit for bit.
TrainingTrace resume_training(const SystemModel &model,
                              const ComplexMatrix &target,
                              const SampleStream &stream,
                              const OptimizerConfig &config,
                              InfidelityVariant variant,
                              const RunState &state);

void save_checkpoint(const RunState &state, const std::string &path);
RunState load_checkpoint(const std::string &path);

}  // namespace rsgrape
