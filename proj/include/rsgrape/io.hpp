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
#include <map>
#include <string>
#include <vector>

#include "rsgrape/evaluator.hpp"
#include "rsgrape/optimizer.hpp"
#include "rsgrape/system.hpp"

namespace rsgrape {

/// Shortest 17-significant-digit decimal form; round-trips doubles exactly.
std::string format_g17(double value);

std::string read_file(const std::string &path);

/// Writes to a temporary file in the same directory, then renames, so a
/// partially written artifact is never observable.
void atomic_write_file(const std::string &path, const std::string &content);

/// Metadata stamped as a '#' comment line at the top of every CSV.
struct FileMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
};

std::string trace_csv(const TrainingTrace &trace, const FileMeta &meta);
std::string cdf_csv(const CdfTable &table, const FileMeta &meta);
std::string diversity_csv(const DiversityHistogram &hist,
                          const FileMeta &meta);
std::string landscape_csv(const LandscapeGrid &grid, const FileMeta &meta,
                          double target_infidelity);

struct EvaluationSummary {
  std::size_t n_samples = 0;
  double j_mean = 0.0;
  double j_max = 0.0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0, q100 = 0.0;
};

EvaluationSummary summarize(const CdfTable &table);
std::string summary_csv(const EvaluationSummary &summary,
                        const FileMeta &meta);

/// Schedule file: '#' comments, a small header (channels, slices, duration,
/// convention), then one row of amplitudes per channel at full precision.
std::string schedule_text(const ControlSchedule &schedule,
                          const std::string &convention,
                          const FileMeta &meta);
void save_schedule(const ControlSchedule &schedule, const std::string &path,
                   const std::string &convention, const FileMeta &meta);
ControlSchedule load_schedule(const std::string &path);

/// Reproducibility record for one run directory.
struct CommandRecord {
  std::string command;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> metrics;  // sorted => stable order
};

struct RunManifest {
  int schema = 1;
  std::string config_hash;
  std::string code_version;
  std::uint64_t seed = 0;
  std::string config_text;  // canonical form, resolved defaults included
  std::vector<CommandRecord> commands;
};

std::string manifest_path(const std::string &dir);
bool manifest_exists(const std::string &dir);
void save_manifest(const RunManifest &manifest, const std::string &dir);
RunManifest load_manifest(const std::string &dir);

/// Joins the trace tail, evaluation quantiles and scan maxima found in a run
/// directory into one summary with stable field ordering. Timestamps are
/// excluded so identical runs report byte-identically.
std::string build_report(const std::string &dir);

}  // namespace rsgrape
