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
#include <string>
#include <vector>

#include "rsgrape/optimizer.hpp"
#include "rsgrape/risk.hpp"
#include "rsgrape/sampler.hpp"
#include "rsgrape/system.hpp"

namespace rsgrape {

/// One Pauli-string term from the [system] section, e.g.
/// { paulis = "Z1 Z2", coeff_mhz = 10.0, uncertainty = 1 }.
/// The uncertainty field is a 1-based dimension index into [uncertainty].
struct PauliTermConfig {
  std::string paulis;
  double coefficient = 1.0;  // MHz under cyclic convention, rad/us otherwise
  std::optional<std::size_t> uncertainty;  // 1-based
};

struct SystemSection {
  std::string preset;  // "three_qubit", or empty when terms are given
  int n_qubits = 0;
  std::vector<PauliTermConfig> drift;
  std::vector<std::string> control_paulis;
  FrequencyConvention convention = FrequencyConvention::Cyclic;
};

struct TargetSection {
  std::string gate;         // "toffoli"
  std::string matrix_file;  // alternative: explicit unitary from file
};

struct ControlSection {
  Eigen::Index channels = 0;  // 0 = from the system definition
  Eigen::Index slices = 100;
  double duration_us = 1.0;
  std::string initial_pulse = "sinusoidal";  // or "zero"
  std::optional<std::uint64_t> initial_pulse_seed;  // resolved at parse
  bool initial_pulse_seed_explicit = false;         // pinned in the file
  std::optional<double> amplitude_clip;
};

struct LossSection {
  InfidelityVariant variant = InfidelityVariant::PhaseInsensitive;
  UtilityFamily family = UtilityFamily::Exponential;
  std::optional<double> mu;
  std::optional<double> r_star;
};

struct OptimizerSection {
  std::optional<Algorithm> algorithm;  // default: inferred from mu/r_star
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  std::optional<double> learning_rate_final;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t max_iterations = 10000;
  std::optional<double> target_loss;
  std::size_t detail_stride = 10;
  std::size_t checkpoint_stride = 1000;
  UpdateRule update_rule = UpdateRule::Adam;
};

struct EvaluationSection {
  std::size_t n_samples = 100000;
  std::size_t n_batches = 100000;
  std::size_t histogram_bins = 100;
  std::size_t grid_points = 41;
  std::optional<double> grid_lo;  // default: the declared support
  std::optional<double> grid_hi;
  double landscape_target = 1e-4;
};

struct RunSection {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
};

struct ExperimentConfig {
  RunSection run;
  SystemSection system;
  TargetSection target;
  ControlSection control;
  DistributionSpec uncertainty;
  LossSection loss;
  OptimizerSection optimizer;
  EvaluationSection evaluation;
};

/// Parses and validates; throws ConfigError with line/field diagnostics.
ExperimentConfig parse_config_text(const std::string &text,
                                   const std::string &source_name = "config");
ExperimentConfig parse_config_file(const std::string &path);

/// Canonical serialization: fixed section and key order, resolved defaults,
/// 17-significant-digit numbers. parse(canonical(c)) == c.
std::string canonical_config_text(const ExperimentConfig &config);

/// FNV-1a hash of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig &config);

/// Initial-pulse seed derived from the master seed when the config does not
/// pin one explicitly.
std::uint64_t derived_pulse_seed(std::uint64_t master_seed);

/// Parses strings like "Z1 Z2" into 1-based (qubit, axis) factors.
std::vector<std::pair<int, PauliAxis>> parse_pauli_string(
    const std::string &text);

SystemModel build_system_model(const ExperimentConfig &config);
ComplexMatrix build_target(const ExperimentConfig &config,
                           const std::string &base_dir = "");
ControlSchedule build_initial_schedule(const ExperimentConfig &config);
OptimizerConfig build_optimizer_config(const ExperimentConfig &config);
UtilitySpec build_utility(const ExperimentConfig &config);
SampleStream train_stream(const ExperimentConfig &config);
SampleStream eval_stream(const ExperimentConfig &config, std::uint64_t salt);

}  // namespace rsgrape
