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
#include "rsgrape/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rsgrape/errors.hpp"
#include "rsgrape/io.hpp"

namespace rsgrape {

void validate(const OptimizerConfig &config) {
  if (config.algorithm == Algorithm::RsFixed) {
    if (!config.mu || config.r_star)
      throw ConfigError(
          "optimizer: fixed-sensitivity mode needs mu and no r_star");
  } else {
    if (!config.r_star || config.mu)
      throw ConfigError("optimizer: adaptive mode needs r_star and no mu");
    const double lo = 1.0 / static_cast<double>(config.batch_size);
    if (*config.r_star < lo - 1e-12 || *config.r_star > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "optimizer: r_star " << *config.r_star << " outside [1/M, 1] = ["
          << lo << ", 1]";
      throw ConfigError(msg.str());
    }
  }
  if (config.batch_size < 1) throw ConfigError("optimizer: batch_size >= 1");
  if (!(config.learning_rate > 0.0))
    throw ConfigError("optimizer: learning_rate must be positive");
  if (config.learning_rate_final && !(*config.learning_rate_final > 0.0))
    throw ConfigError("optimizer: learning_rate_final must be positive");
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 > 0.0 && config.beta2 < 1.0))
    throw ConfigError("optimizer: beta1, beta2 must lie in (0, 1)");
  if (config.detail_stride < 1)
    throw ConfigError("optimizer: detail_stride must be >= 1");
}

AdamState AdamState::zeros(Eigen::Index channels, Eigen::Index slices) {
  return AdamState{RealMatrix::Zero(channels, slices),
                   RealMatrix::Zero(channels, slices), 0};
}

RealMatrix adam_update(AdamState &state, const RealMatrix &gradient,
                       double alpha, double beta1, double beta2, double eps) {
  if (gradient.rows() != state.m.rows() || gradient.cols() != state.m.cols())
    throw std::invalid_argument("adam_update: shape mismatch");
  if (!gradient.allFinite())
    throw NumericalError("adam_update: non-finite gradient (max|g| = inf/nan)");
  state.step += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * gradient;
  state.v = beta2 * state.v + (1.0 - beta2) * gradient.cwiseProduct(gradient);
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(beta1, t);
  const double corr2 = 1.0 - std::pow(beta2, t);
  const RealMatrix m_hat = state.m / corr1;
  const RealMatrix v_hat = state.v / corr2;
  return (-alpha * m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

namespace {

TrainingTrace run_training(const SystemModel &model,
                           const ComplexMatrix &target,
                           const SampleStream &stream,
                           const OptimizerConfig &config,
                           InfidelityVariant variant, RunState state) {
  validate(config);
  validate(state.schedule);
  const auto t_start = std::chrono::steady_clock::now();

  TrainingTrace trace;
  trace.records.reserve(config.max_iterations >= state.next_iteration
                            ? config.max_iterations - state.next_iteration + 1
                            : 0);

  auto write_checkpoint = [&]() {
    if (!config.checkpoint_path.empty())
      save_checkpoint(state, config.checkpoint_path);
  };

  auto step_size = [&](std::size_t k) {
    if (!config.learning_rate_final || config.max_iterations <= 1)
      return config.learning_rate;
    const double frac = static_cast<double>(k - 1) /
                        static_cast<double>(config.max_iterations - 1);
    return config.learning_rate *
           std::pow(*config.learning_rate_final / config.learning_rate, frac);
  };

  for (std::size_t k = state.next_iteration; k <= config.max_iterations; ++k) {
    const UncertaintyBatch batch = draw_batch(stream, k, config.batch_size);
    SampleSetEvaluation samples = evaluate_samples(
        model, state.schedule, batch, target, variant, config.threads, true);
    if (!samples.losses.allFinite()) {
      write_checkpoint();
      std::ostringstream msg;
      msg << "non-finite batch loss at iteration " << k;
      throw NumericalError(msg.str());
    }

    double mu_k;
    if (config.algorithm == Algorithm::RsFixed) {
      mu_k = *config.mu;
    } else if (config.batch_size == 1) {
      mu_k = config.family == UtilityFamily::Exponential ? 0.0 : 1.0;
    } else {
      mu_k = solve_sensitivity(samples.losses, *config.r_star, config.family)
                 .mu;
    }

    const UtilitySpec utility{config.family, mu_k};
    const BatchWeights weights = batch_weights(samples.losses, utility);
    const RealMatrix gradient =
        weighted_gradient(samples.gradients, weights.weights);

    const double alpha = step_size(k);
    RealMatrix delta;
    if (config.update_rule == UpdateRule::Adam) {
      delta = adam_update(state.adam, gradient, alpha, config.beta1,
                          config.beta2, config.adam_epsilon);
    } else {
      if (!gradient.allFinite()) {
        write_checkpoint();
        throw NumericalError("non-finite gradient");
      }
      delta = -alpha * gradient;
      state.adam.step += 1;
    }
    state.schedule.amplitudes += delta;
    if (config.amplitude_clip) {
      const double clip = *config.amplitude_clip;
      state.schedule.amplitudes =
          state.schedule.amplitudes.cwiseMax(-clip).cwiseMin(clip);
    }
    if (!state.schedule.amplitudes.allFinite()) {
      write_checkpoint();
      std::ostringstream msg;
      msg << "non-finite control amplitude after iteration " << k;
      throw NumericalError(msg.str());
    }

    IterationRecord record;
    record.iteration = k;
    // plain ascending-index sums so the scalars are exactly recomputable
    // from the stored loss vectors
    double loss_sum = 0.0, loss_max = 0.0;
    for (Eigen::Index i = 0; i < samples.losses.size(); ++i) {
      loss_sum += samples.losses(i);
      loss_max = std::max(loss_max, samples.losses(i));
    }
    record.j_mean = loss_sum / static_cast<double>(samples.losses.size());
    record.j_max = loss_max;
    record.mu = mu_k;
    record.grad_norm = gradient.norm();
    if ((k - 1) % config.detail_stride == 0) {
      record.losses.assign(samples.losses.data(),
                           samples.losses.data() + samples.losses.size());
      record.weights.assign(weights.weights.data(),
                            weights.weights.data() + weights.weights.size());
    }
    trace.records.push_back(std::move(record));
    if (config.progress) config.progress(trace.records.back());

    state.next_iteration = k + 1;
    if (config.checkpoint_stride > 0 && k % config.checkpoint_stride == 0)
      write_checkpoint();

    if (config.target_loss && trace.records.back().j_mean <= *config.target_loss) {
      trace.reached_target = true;
      break;
    }
  }

  write_checkpoint();
  trace.final_schedule = std::move(state.schedule);
  trace.iterations_run = trace.records.size();
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return trace;
}

RunState fresh_state(const ControlSchedule &initial,
                     const OptimizerConfig &config) {
  RunState state;
  state.schedule = initial;
  state.adam =
      AdamState::zeros(initial.channels(), initial.slices());
  state.next_iteration = 1;
  state.seed = config.seed;
  return state;
}

}  // namespace

TrainingTrace run_rs_grape(const SystemModel &model,
                           const ComplexMatrix &target,
                           const ControlSchedule &initial,
                           const SampleStream &stream,
                           const OptimizerConfig &config,
                           InfidelityVariant variant) {
  if (config.algorithm != Algorithm::RsFixed)
    throw ConfigError("run_rs_grape: config is not fixed-sensitivity");
  return run_training(model, target, stream, config, variant,
                      fresh_state(initial, config));
}

TrainingTrace run_adaptive_rs_grape(const SystemModel &model,
                                    const ComplexMatrix &target,
                                    const ControlSchedule &initial,
                                    const SampleStream &stream,
                                    const OptimizerConfig &config,
                                    InfidelityVariant variant) {
  if (config.algorithm != Algorithm::RsAdaptive)
    throw ConfigError("run_adaptive_rs_grape: config is not adaptive");
  return run_training(model, target, stream, config, variant,
                      fresh_state(initial, config));
}

TrainingTrace resume_training(const SystemModel &model,
                              const ComplexMatrix &target,
                              const SampleStream &stream,
                              const OptimizerConfig &config,
                              InfidelityVariant variant,
                              const RunState &state) {
  return run_training(model, target, stream, config, variant, state);
}

namespace {

void write_row(std::ostream &out, const char *label, const RealMatrix &m,
               Eigen::Index row) {
  out << label;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    out << ' ' << format_g17(m(row, j));
  out << '\n';
}

}  // namespace

void save_checkpoint(const RunState &state, const std::string &path) {
  std::ostringstream out;
  const Eigen::Index channels = state.schedule.channels();
  const Eigen::Index slices = state.schedule.slices();
  out << "rsgrape-checkpoint v1\n";
  out << "seed " << state.seed << '\n';
  out << "next_iteration " << state.next_iteration << '\n';
  out << "channels " << channels << '\n';
  out << "slices " << slices << '\n';
  out << "duration_us " << format_g17(state.schedule.duration) << '\n';
  out << "adam_step " << state.adam.step << '\n';
  for (Eigen::Index c = 0; c < channels; ++c)
    write_row(out, "u", state.schedule.amplitudes, c);
  for (Eigen::Index c = 0; c < channels; ++c)
    write_row(out, "m", state.adam.m, c);
  for (Eigen::Index c = 0; c < channels; ++c)
    write_row(out, "v", state.adam.v, c);
  out << "end\n";
  atomic_write_file(path, out.str());
}

RunState load_checkpoint(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "rsgrape-checkpoint v1")
    throw IoError("checkpoint: unknown version or corrupt header in " + path);

  RunState state;
  Eigen::Index channels = 0, slices = 0;
  auto expect_scalar = [&](const char *key) -> std::string {
    if (!std::getline(in, line))
      throw IoError(std::string("checkpoint: truncated before ") + key);
    std::istringstream fields(line);
    std::string name, value;
    fields >> name >> value;
    if (name != key)
      throw IoError(std::string("checkpoint: expected ") + key + ", got " +
                    name);
    return value;
  };
  state.seed = std::stoull(expect_scalar("seed"));
  state.next_iteration = std::stoull(expect_scalar("next_iteration"));
  channels = static_cast<Eigen::Index>(std::stoll(expect_scalar("channels")));
  slices = static_cast<Eigen::Index>(std::stoll(expect_scalar("slices")));
  state.schedule.duration = std::stod(expect_scalar("duration_us"));
  state.adam.step = std::stoull(expect_scalar("adam_step"));
  if (channels < 1 || slices < 1)
    throw IoError("checkpoint: invalid shape");

  state.schedule.amplitudes.resize(channels, slices);
  state.adam.m.resize(channels, slices);
  state.adam.v.resize(channels, slices);
  auto read_rows = [&](const char *label, RealMatrix &m) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      if (!std::getline(in, line))
        throw IoError(std::string("checkpoint: truncated in ") + label +
                      " rows");
      std::istringstream fields(line);
      std::string name;
      fields >> name;
      if (name != label)
        throw IoError(std::string("checkpoint: expected ") + label +
                      " row, got " + name);
      for (Eigen::Index j = 0; j < slices; ++j)
        if (!(fields >> m(c, j)))
          throw IoError(std::string("checkpoint: short ") + label + " row");
    }
  };
  read_rows("u", state.schedule.amplitudes);
  read_rows("m", state.adam.m);
  read_rows("v", state.adam.v);
  if (!std::getline(in, line) || line != "end")
    throw IoError("checkpoint: missing end marker (truncated file?)");
  return state;
}

}  // namespace rsgrape
