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
// Command-line front end: optimize | evaluate | scan | report.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical or
// artifact failure.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rsgrape/config.hpp"
#include "rsgrape/errors.hpp"
#include "rsgrape/evaluator.hpp"
#include "rsgrape/io.hpp"
#include "rsgrape/optimizer.hpp"
#include "rsgrape/rng.hpp"
#include "rsgrape/version.hpp"

namespace fs = std::filesystem;
using namespace rsgrape;

namespace {

constexpr std::uint64_t kCdfSalt = UINT64_C(0xCDF);
constexpr std::uint64_t kDiversitySalt = UINT64_C(0xD1F);

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

struct CommonArgs {
  std::string config_path;
  std::string schedule_path;
  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed_override;
};

ExperimentConfig load_config(const CommonArgs &args) {
  ExperimentConfig config = parse_config_file(args.config_path);
  if (args.seed_override) {
    config.run.seed = *args.seed_override;
    // re-derive the pulse seed unless the file pinned one; the canonical
    // text always records the resolved value
    if (!config.control.initial_pulse_seed_explicit)
      config.control.initial_pulse_seed = derived_pulse_seed(config.run.seed);
  }
  if (!args.out_dir.empty()) {
    config.run.output_dir = args.out_dir;
  } else if (const char *env = std::getenv("RSGRAPE_OUTPUT_DIR")) {
    if (*env) config.run.output_dir = env;
  }
  return config;
}

std::string convention_name(const ExperimentConfig &config) {
  return config.system.convention == FrequencyConvention::Cyclic ? "cyclic"
                                                                 : "angular";
}

RunManifest open_manifest(const ExperimentConfig &config,
                          const std::string &dir, const std::string &hash) {
  if (manifest_exists(dir)) {
    RunManifest existing = load_manifest(dir);
    if (existing.config_hash == hash) return existing;
    std::cerr << "note: overwriting manifest for a different config ("
              << existing.config_hash << " -> " << hash << ")\n";
  }
  RunManifest manifest;
  manifest.config_hash = hash;
  manifest.code_version = kVersion;
  manifest.seed = config.run.seed;
  manifest.config_text = canonical_config_text(config);
  return manifest;
}

int cmd_optimize(const CommonArgs &args) {
  const ExperimentConfig config = load_config(args);
  const std::string dir = config.run.output_dir;
  const std::string hash = config_hash(config);
  const FileMeta meta{hash, config.run.seed};

  const SystemModel model = build_system_model(config);
  const ComplexMatrix target =
      build_target(config, fs::path(args.config_path).parent_path().string());
  if (target.rows() != model.dim)
    throw ConfigError("target dimension does not match the system");
  const ControlSchedule schedule0 = build_initial_schedule(config);
  OptimizerConfig opt = build_optimizer_config(config);
  opt.threads = args.threads;
  fs::create_directories(dir);
  opt.checkpoint_path = (fs::path(dir) / "checkpoint.txt").string();

  const std::size_t report_every =
      std::max<std::size_t>(1, opt.max_iterations / 50);
  opt.progress = [&](const IterationRecord &record) {
    if (record.iteration % report_every == 0)
      std::cerr << "iter " << record.iteration << "  j_mean "
                << record.j_mean << "  j_max " << record.j_max << "  mu "
                << record.mu << '\n';
  };

  RunManifest manifest = open_manifest(config, dir, hash);
  CommandRecord record;
  record.command = "optimize";
  record.started = utc_now();

  const SampleStream stream = train_stream(config);
  const TrainingTrace trace =
      opt.algorithm == Algorithm::RsFixed
          ? run_rs_grape(model, target, schedule0, stream, opt,
                         config.loss.variant)
          : run_adaptive_rs_grape(model, target, schedule0, stream, opt,
                                  config.loss.variant);

  atomic_write_file((fs::path(dir) / "trace.csv").string(),
                    trace_csv(trace, meta));
  save_schedule(trace.final_schedule,
                (fs::path(dir) / "schedule.txt").string(),
                convention_name(config), meta);

  record.finished = utc_now();
  record.outputs = {"trace.csv", "schedule.txt", "checkpoint.txt"};
  record.metrics["iterations"] = std::to_string(trace.iterations_run);
  if (!trace.records.empty()) {
    record.metrics["final_j_mean"] = format_g17(trace.records.back().j_mean);
    record.metrics["final_j_max"] = format_g17(trace.records.back().j_max);
  }
  record.metrics["reached_target"] = trace.reached_target ? "true" : "false";
  manifest.commands.push_back(record);
  save_manifest(manifest, dir);

  std::cout << "optimize: " << trace.iterations_run << " iterations";
  if (!trace.records.empty())
    std::cout << ", final j_mean " << trace.records.back().j_mean
              << ", j_max " << trace.records.back().j_max;
  std::cout << ", artifacts in " << dir << '\n';
  return 0;
}

ControlSchedule load_checked_schedule(const CommonArgs &args,
                                      const SystemModel &model) {
  const ControlSchedule schedule = load_schedule(args.schedule_path);
  if (schedule.channels() != model.channels()) {
    std::ostringstream msg;
    msg << "schedule has " << schedule.channels() << " channels, system has "
        << model.channels();
    throw ConfigError(msg.str());
  }
  return schedule;
}

int cmd_evaluate(const CommonArgs &args) {
  const ExperimentConfig config = load_config(args);
  const std::string dir = config.run.output_dir;
  const std::string hash = config_hash(config);
  const FileMeta meta{hash, config.run.seed};

  const SystemModel model = build_system_model(config);
  const ComplexMatrix target =
      build_target(config, fs::path(args.config_path).parent_path().string());
  const ControlSchedule schedule = load_checked_schedule(args, model);

  RunManifest manifest = open_manifest(config, dir, hash);
  CommandRecord record;
  record.command = "evaluate";
  record.started = utc_now();

  const CdfTable cdf = infidelity_cdf(
      model, target, schedule, eval_stream(config, kCdfSalt),
      config.evaluation.n_samples, config.loss.variant, args.threads);
  const EvaluationSummary summary = summarize(cdf);

  const SampleStream div_stream = eval_stream(config, kDiversitySalt);
  const DiversityHistogram hist =
      config.loss.mu
          ? diversity_pdf(model, target, schedule, div_stream,
                          UtilitySpec{config.loss.family, *config.loss.mu},
                          config.evaluation.n_batches,
                          config.optimizer.batch_size, config.loss.variant,
                          args.threads, config.evaluation.histogram_bins)
          : diversity_pdf_adaptive(
                model, target, schedule, div_stream, *config.loss.r_star,
                config.loss.family, config.evaluation.n_batches,
                config.optimizer.batch_size, config.loss.variant,
                args.threads, config.evaluation.histogram_bins);

  fs::create_directories(dir);
  atomic_write_file((fs::path(dir) / "cdf.csv").string(),
                    cdf_csv(cdf, meta));
  atomic_write_file((fs::path(dir) / "diversity.csv").string(),
                    diversity_csv(hist, meta));
  atomic_write_file((fs::path(dir) / "summary.csv").string(),
                    summary_csv(summary, meta));

  record.finished = utc_now();
  record.outputs = {"cdf.csv", "diversity.csv", "summary.csv"};
  record.metrics["n_samples"] = std::to_string(summary.n_samples);
  record.metrics["j_mean"] = format_g17(summary.j_mean);
  record.metrics["j_max"] = format_g17(summary.j_max);
  record.metrics["q99"] = format_g17(summary.q99);
  manifest.commands.push_back(record);
  save_manifest(manifest, dir);

  std::cout << "evaluate: n " << summary.n_samples << ", j_mean "
            << summary.j_mean << ", q99 " << summary.q99 << ", j_max "
            << summary.j_max << ", artifacts in " << dir << '\n';
  return 0;
}

int cmd_scan(const CommonArgs &args) {
  const ExperimentConfig config = load_config(args);
  const std::string dir = config.run.output_dir;
  const std::string hash = config_hash(config);
  const FileMeta meta{hash, config.run.seed};

  const SystemModel model = build_system_model(config);
  if (model.uncertainty_dimension() != 2)
    throw ConfigError("scan needs a model with exactly 2 uncertainty "
                      "dimensions");
  const ComplexMatrix target =
      build_target(config, fs::path(args.config_path).parent_path().string());
  const ControlSchedule schedule = load_checked_schedule(args, model);

  auto support = [&](std::size_t dim) -> std::pair<double, double> {
    const DimensionLaw &law = config.uncertainty.dims[dim];
    if (law.kind == DimensionLaw::Kind::Uniform) return {law.a, law.b};
    return {law.a - 3.0 * law.b, law.a + 3.0 * law.b};
  };

  GridSpec grid;
  grid.n1 = grid.n2 = config.evaluation.grid_points;
  std::tie(grid.lo1, grid.hi1) = support(0);
  std::tie(grid.lo2, grid.hi2) = support(1);
  if (config.evaluation.grid_lo) {
    grid.lo1 = grid.lo2 = *config.evaluation.grid_lo;
  }
  if (config.evaluation.grid_hi) {
    grid.hi1 = grid.hi2 = *config.evaluation.grid_hi;
  }
  const auto [s1_lo, s1_hi] = support(0);
  const auto [s2_lo, s2_hi] = support(1);
  if (grid.lo1 < s1_lo || grid.hi1 > s1_hi || grid.lo2 < s2_lo ||
      grid.hi2 > s2_hi)
    std::cerr << "warning: grid extends beyond the declared uncertainty "
                 "support; scanning anyway\n";

  RunManifest manifest = open_manifest(config, dir, hash);
  CommandRecord record;
  record.command = "scan";
  record.started = utc_now();

  const LandscapeGrid landscape = landscape_scan(
      model, target, schedule, grid, config.loss.variant, args.threads);

  fs::create_directories(dir);
  atomic_write_file(
      (fs::path(dir) / "landscape.csv").string(),
      landscape_csv(landscape, meta, config.evaluation.landscape_target));

  record.finished = utc_now();
  record.outputs = {"landscape.csv"};
  record.metrics["max_infidelity"] = format_g17(landscape.max_value());
  record.metrics["target"] = format_g17(config.evaluation.landscape_target);
  manifest.commands.push_back(record);
  save_manifest(manifest, dir);

  std::cout << "scan: " << grid.n1 << "x" << grid.n2 << " grid, max "
            << landscape.max_value() << " (target "
            << config.evaluation.landscape_target << "), artifacts in "
            << dir << '\n';
  return 0;
}

int cmd_report(const std::string &dir) {
  const std::string report = build_report(dir);
  atomic_write_file((fs::path(dir) / "report.txt").string(), report);
  std::cout << report;
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Robust quantum gate pulse synthesis by risk-sensitive "
               "stochastic gradient optimization"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App *cmd, bool with_schedule) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required();
    if (with_schedule)
      cmd->add_option("--schedule", args.schedule_path, "schedule file")
          ->required();
    cmd->add_option("--out", args.out_dir, "output directory override");
    cmd->add_option("--threads", args.threads,
                    "worker threads (0 = machine default)");
    cmd->add_option("--seed", seed_value, "master seed override")
        ->each([&](const std::string &) { args.seed_override = seed_value; });
  };

  CLI::App *optimize =
      app.add_subcommand("optimize", "train a control schedule");
  add_common(optimize, false);
  CLI::App *evaluate =
      app.add_subcommand("evaluate", "infidelity cdf and diversity stats");
  add_common(evaluate, true);
  CLI::App *scan =
      app.add_subcommand("scan", "infidelity over the uncertainty grid");
  add_common(scan, true);
  CLI::App *report =
      app.add_subcommand("report", "consolidated summary of a run directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(args);
    if (evaluate->parsed()) return cmd_evaluate(args);
    if (scan->parsed()) return cmd_scan(args);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const ConfigError &err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const NumericalError &err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return 3;
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  }
  return 0;
}
