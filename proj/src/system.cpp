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
#include "rsgrape/system.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rsgrape/rng.hpp"

namespace rsgrape {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr std::uint64_t kInitPulseTag = UINT64_C(0x494E4954);
}  // namespace

ControlSchedule ControlSchedule::zeros(Eigen::Index channels,
                                       Eigen::Index slices, double duration) {
  ControlSchedule schedule;
  schedule.amplitudes = RealMatrix::Zero(channels, slices);
  schedule.duration = duration;
  validate(schedule);
  return schedule;
}

void validate(const ControlSchedule &schedule) {
  if (schedule.channels() < 1 || schedule.slices() < 1)
    throw std::invalid_argument("schedule: needs at least 1 channel and slice");
  if (!(schedule.duration > 0.0) || !std::isfinite(schedule.duration))
    throw std::invalid_argument("schedule: duration must be positive");
  if (!schedule.amplitudes.allFinite())
    throw std::invalid_argument("schedule: non-finite amplitude");
}

std::size_t SystemModel::uncertainty_dimension() const {
  std::size_t dim = 0;
  for (const auto &term : drift_terms)
    if (term.uncertainty_index) dim = std::max(dim, *term.uncertainty_index + 1);
  return dim;
}

void validate(const SystemModel &model) {
  if (model.dim < 2) throw std::invalid_argument("model: dim must be >= 2");
  auto check = [&](const ComplexMatrix &m, const char *what) {
    if (m.rows() != model.dim || m.cols() != model.dim) {
      std::ostringstream msg;
      msg << "model: " << what << " is " << m.rows() << "x" << m.cols()
          << ", expected " << model.dim << "x" << model.dim;
      throw std::invalid_argument(msg.str());
    }
    if (!is_hermitian(m)) {
      std::ostringstream msg;
      msg << "model: " << what << " is not Hermitian";
      throw std::invalid_argument(msg.str());
    }
  };
  for (const auto &term : model.drift_terms) check(term.matrix, "drift term");
  for (const auto &term : model.control_terms) check(term, "control term");
}

ComplexMatrix slice_hamiltonian(const SystemModel &model,
                                const ControlSchedule &schedule,
                                Eigen::Index slice_index,
                                const UncertaintySample &sample) {
  if (slice_index < 1 || slice_index > schedule.slices()) {
    std::ostringstream msg;
    msg << "slice_hamiltonian: slice " << slice_index << " out of range [1, "
        << schedule.slices() << "]";
    throw std::out_of_range(msg.str());
  }
  const std::size_t needed = model.uncertainty_dimension();
  if (static_cast<std::size_t>(sample.size()) < needed) {
    std::ostringstream msg;
    msg << "slice_hamiltonian: sample has " << sample.size()
        << " dimensions, model references " << needed;
    throw std::invalid_argument(msg.str());
  }
  if (schedule.channels() != model.channels()) {
    std::ostringstream msg;
    msg << "slice_hamiltonian: schedule has " << schedule.channels()
        << " channels, model has " << model.channels();
    throw std::invalid_argument(msg.str());
  }

  ComplexMatrix h = ComplexMatrix::Zero(model.dim, model.dim);
  for (const auto &term : model.drift_terms) {
    double factor = term.coefficient;
    if (term.uncertainty_index)
      factor *= 1.0 + sample(static_cast<Eigen::Index>(*term.uncertainty_index));
    h.noalias() += factor * term.matrix;
  }
  const Eigen::Index col = slice_index - 1;
  for (Eigen::Index c = 0; c < model.channels(); ++c)
    h.noalias() += schedule.amplitudes(c, col) * model.control_terms[c];
  return h;
}

SystemModel three_qubit_preset(FrequencyConvention convention) {
  const double coupling_mhz = 10.0;
  const double j = convention == FrequencyConvention::Cyclic
                       ? kTwoPi * coupling_mhz
                       : coupling_mhz;
  SystemModel model;
  model.dim = 8;
  model.drift_terms.push_back(
      {pauli_string({{1, PauliAxis::Z}, {2, PauliAxis::Z}}, 3), j, 0});
  model.drift_terms.push_back(
      {pauli_string({{2, PauliAxis::Z}, {3, PauliAxis::Z}}, 3), j, 1});
  for (int qubit = 1; qubit <= 3; ++qubit) {
    model.control_terms.push_back(pauli_string({{qubit, PauliAxis::X}}, 3));
    model.control_terms.push_back(pauli_string({{qubit, PauliAxis::Y}}, 3));
  }
  return model;
}

ComplexMatrix toffoli_gate() {
  ComplexMatrix gate = ComplexMatrix::Identity(8, 8);
  gate(6, 6) = 0.0;
  gate(7, 7) = 0.0;
  gate(6, 7) = 1.0;
  gate(7, 6) = 1.0;
  return gate;
}

ControlSchedule sinusoidal_schedule(const std::vector<SinusoidParams> &params,
                                    Eigen::Index slices, double duration) {
  if (params.empty())
    throw std::invalid_argument("sinusoidal_schedule: no channel pairs");
  const Eigen::Index channels = 2 * static_cast<Eigen::Index>(params.size());
  ControlSchedule schedule = ControlSchedule::zeros(channels, slices, duration);
  const double dt = schedule.dt();
  for (std::size_t pair = 0; pair < params.size(); ++pair) {
    const auto &[amp, freq, phase] = params[pair];
    for (Eigen::Index j = 0; j < slices; ++j) {
      const double t = (static_cast<double>(j) + 0.5) * dt;  // slice midpoint
      schedule.amplitudes(2 * pair, j) = amp * std::sin(freq * t + phase);
      schedule.amplitudes(2 * pair + 1, j) = amp * std::cos(freq * t + phase);
    }
  }
  return schedule;
}

ControlSchedule initial_schedule(std::uint64_t seed, Eigen::Index channels,
                                 Eigen::Index slices, double duration) {
  if (channels < 2 || channels % 2 != 0)
    throw std::invalid_argument(
        "initial_schedule: channels must come in (x, y) pairs");
  std::vector<SinusoidParams> params;
  for (Eigen::Index pair = 0; pair < channels / 2; ++pair) {
    const auto p = static_cast<std::uint64_t>(pair);
    SinusoidParams sp;
    sp.amplitude =
        rng::uniform(rng::word_at(seed, kInitPulseTag, p, 0), 0.0, kTwoPi * 5);
    sp.frequency =
        rng::uniform(rng::word_at(seed, kInitPulseTag, p, 1), 0.0, kTwoPi * 5);
    sp.phase =
        rng::uniform(rng::word_at(seed, kInitPulseTag, p, 2), 0.0, kTwoPi);
    params.push_back(sp);
  }
  return sinusoidal_schedule(params, slices, duration);
}

}  // namespace rsgrape
