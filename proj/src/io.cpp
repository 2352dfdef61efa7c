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
#include "rsgrape/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rsgrape/errors.hpp"
#include "rsgrape/version.hpp"

namespace fs = std::filesystem;

namespace rsgrape {

std::string format_g17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void atomic_write_file(const std::string &path, const std::string &content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      throw IoError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

namespace {

std::string meta_line(const char *kind, const FileMeta &meta) {
  std::ostringstream out;
  out << "# rsgrape " << kind << " config=" << meta.config_hash
      << " seed=" << meta.seed << '\n';
  return out.str();
}

}  // namespace

std::string trace_csv(const TrainingTrace &trace, const FileMeta &meta) {
  std::ostringstream out;
  out << meta_line("trace", meta);
  out << "iter,j_mean,j_max,mu,grad_norm\n";
  for (const auto &record : trace.records)
    out << record.iteration << ',' << format_g17(record.j_mean) << ','
        << format_g17(record.j_max) << ',' << format_g17(record.mu) << ','
        << format_g17(record.grad_norm) << '\n';
  return out.str();
}

std::string cdf_csv(const CdfTable &table, const FileMeta &meta) {
  std::ostringstream out;
  out << meta_line("cdf", meta);
  out << "infidelity,cum_prob\n";
  for (std::size_t i = 0; i < table.n; ++i)
    out << format_g17(table.values[i]) << ','
        << format_g17(table.cum_probs[i]) << '\n';
  return out.str();
}

std::string diversity_csv(const DiversityHistogram &hist,
                          const FileMeta &meta) {
  std::ostringstream out;
  out << meta_line("diversity", meta);
  out << "bin_lo,bin_hi,density\n";
  for (std::size_t bin = 0; bin + 1 < hist.bin_edges.size(); ++bin)
    out << format_g17(hist.bin_edges[bin]) << ','
        << format_g17(hist.bin_edges[bin + 1]) << ','
        << format_g17(hist.density(bin)) << '\n';
  return out.str();
}

std::string landscape_csv(const LandscapeGrid &grid, const FileMeta &meta,
                          double target_infidelity) {
  std::ostringstream out;
  out << meta_line("landscape", meta);
  const auto [i_max, j_max] = grid.argmax();
  out << "# max_infidelity=" << format_g17(grid.max_value())
      << " at eps1=" << format_g17(grid.eps1[i_max])
      << " eps2=" << format_g17(grid.eps2[j_max])
      << " target=" << format_g17(target_infidelity) << '\n';
  out << "eps1,eps2,infidelity\n";
  for (std::size_t i = 0; i < grid.eps1.size(); ++i)
    for (std::size_t j = 0; j < grid.eps2.size(); ++j)
      out << format_g17(grid.eps1[i]) << ',' << format_g17(grid.eps2[j])
          << ','
          << format_g17(grid.infidelity(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j)))
          << '\n';
  return out.str();
}

EvaluationSummary summarize(const CdfTable &table) {
  EvaluationSummary summary;
  summary.n_samples = table.n;
  double acc = 0.0;
  for (double v : table.values) acc += v;
  summary.j_mean = acc / static_cast<double>(table.n);
  summary.j_max = table.values.back();
  summary.q50 = table.quantile(0.50);
  summary.q90 = table.quantile(0.90);
  summary.q99 = table.quantile(0.99);
  summary.q100 = table.quantile(1.0);
  return summary;
}

std::string summary_csv(const EvaluationSummary &summary,
                        const FileMeta &meta) {
  std::ostringstream out;
  out << meta_line("summary", meta);
  out << "n_samples,j_mean,j_max,q50,q90,q99,q100\n";
  out << summary.n_samples << ',' << format_g17(summary.j_mean) << ','
      << format_g17(summary.j_max) << ',' << format_g17(summary.q50) << ','
      << format_g17(summary.q90) << ',' << format_g17(summary.q99) << ','
      << format_g17(summary.q100) << '\n';
  return out.str();
}

std::string schedule_text(const ControlSchedule &schedule,
                          const std::string &convention,
                          const FileMeta &meta) {
  std::ostringstream out;
  out << meta_line("schedule", meta);
  out << "channels " << schedule.channels() << '\n';
  out << "slices " << schedule.slices() << '\n';
  out << "duration_us " << format_g17(schedule.duration) << '\n';
  out << "convention " << convention << '\n';
  for (Eigen::Index c = 0; c < schedule.channels(); ++c) {
    for (Eigen::Index j = 0; j < schedule.slices(); ++j) {
      if (j) out << ' ';
      out << format_g17(schedule.amplitudes(c, j));
    }
    out << '\n';
  }
  return out.str();
}

void save_schedule(const ControlSchedule &schedule, const std::string &path,
                   const std::string &convention, const FileMeta &meta) {
  atomic_write_file(path, schedule_text(schedule, convention, meta));
}

ControlSchedule load_schedule(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("schedule: cannot open " + path);
  std::string line;
  Eigen::Index channels = -1, slices = -1;
  double duration = 0.0;
  // header: comments, then channels/slices/duration_us/convention lines
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "channels")
      fields >> channels;
    else if (key == "slices")
      fields >> slices;
    else if (key == "duration_us")
      fields >> duration;
    else if (key == "convention") {
      break;  // amplitude rows follow
    } else {
      throw IoError("schedule: unexpected header line '" + line + "'");
    }
  }
  if (channels < 1 || slices < 1 || !(duration > 0.0))
    throw IoError("schedule: incomplete header in " + path);
  ControlSchedule schedule;
  schedule.duration = duration;
  schedule.amplitudes.resize(channels, slices);
  for (Eigen::Index c = 0; c < channels; ++c) {
    if (!std::getline(in, line))
      throw IoError("schedule: truncated amplitude rows in " + path);
    std::istringstream fields(line);
    for (Eigen::Index j = 0; j < slices; ++j)
      if (!(fields >> schedule.amplitudes(c, j)))
        throw IoError("schedule: short amplitude row in " + path);
  }
  validate(schedule);
  return schedule;
}

std::string manifest_path(const std::string &dir) {
  return (fs::path(dir) / "manifest.json").string();
}

bool manifest_exists(const std::string &dir) {
  return fs::exists(manifest_path(dir));
}

void save_manifest(const RunManifest &manifest, const std::string &dir) {
  nlohmann::ordered_json doc;
  doc["schema"] = manifest.schema;
  doc["config_hash"] = manifest.config_hash;
  doc["code_version"] = manifest.code_version.empty() ? kVersion
                                                      : manifest.code_version;
  doc["seed"] = manifest.seed;
  nlohmann::ordered_json commands = nlohmann::ordered_json::array();
  for (const auto &record : manifest.commands) {
    nlohmann::ordered_json entry;
    entry["command"] = record.command;
    entry["started"] = record.started;
    entry["finished"] = record.finished;
    entry["outputs"] = record.outputs;
    nlohmann::ordered_json metrics;
    for (const auto &[key, value] : record.metrics) metrics[key] = value;
    entry["metrics"] = metrics;
    commands.push_back(entry);
  }
  doc["commands"] = commands;
  doc["config"] = manifest.config_text;
  atomic_write_file(manifest_path(dir), doc.dump(2) + "\n");
}

RunManifest load_manifest(const std::string &dir) {
  const std::string path = manifest_path(dir);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception &err) {
    throw IoError("manifest: cannot parse " + path + ": " + err.what());
  }
  RunManifest manifest;
  try {
    manifest.schema = doc.at("schema").get<int>();
    manifest.config_hash = doc.at("config_hash").get<std::string>();
    manifest.code_version = doc.at("code_version").get<std::string>();
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    manifest.config_text = doc.at("config").get<std::string>();
    for (const auto &entry : doc.at("commands")) {
      CommandRecord record;
      record.command = entry.at("command").get<std::string>();
      record.started = entry.at("started").get<std::string>();
      record.finished = entry.at("finished").get<std::string>();
      record.outputs = entry.at("outputs").get<std::vector<std::string>>();
      for (const auto &[key, value] : entry.at("metrics").items())
        record.metrics[key] = value.get<std::string>();
      manifest.commands.push_back(std::move(record));
    }
  } catch (const nlohmann::json::exception &err) {
    throw IoError("manifest: missing field in " + path + ": " + err.what());
  }
  return manifest;
}

namespace {

// Last non-empty data line of a CSV (skipping '#' comments and the header).
std::string csv_last_row(const std::string &text) {
  std::istringstream in(text);
  std::string line, last;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    last = line;
  }
  return last;
}

std::string csv_header(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return line;
  }
  return {};
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

std::string build_report(const std::string &dir) {
  if (!manifest_exists(dir))
    throw ConfigError("report: no manifest.json in " + dir);
  const RunManifest manifest = load_manifest(dir);

  std::ostringstream out;
  out << "# rsgrape report\n";
  out << "config_hash=" << manifest.config_hash << '\n';
  out << "code_version=" << manifest.code_version << '\n';
  out << "seed=" << manifest.seed << '\n';

  const fs::path base(dir);
  const fs::path trace_path = base / "trace.csv";
  if (fs::exists(trace_path)) {
    out << "[optimize]\n";
    const std::string text = read_file(trace_path.string());
    const auto fields = split_csv(csv_last_row(text));
    const auto names = split_csv(csv_header(text));
    if (fields.size() == names.size())
      for (std::size_t i = 0; i < names.size(); ++i)
        out << "final_" << names[i] << '=' << fields[i] << '\n';
  }

  const fs::path summary_path = base / "summary.csv";
  if (fs::exists(summary_path)) {
    out << "[evaluate]\n";
    const std::string text = read_file(summary_path.string());
    const auto fields = split_csv(csv_last_row(text));
    const auto names = split_csv(csv_header(text));
    if (fields.size() == names.size())
      for (std::size_t i = 0; i < names.size(); ++i)
        out << names[i] << '=' << fields[i] << '\n';
  }

  const fs::path landscape_path = base / "landscape.csv";
  if (fs::exists(landscape_path)) {
    out << "[scan]\n";
    std::istringstream in(read_file(landscape_path.string()));
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("# max_infidelity=", 0) == 0) {
        // "# key=v at eps1=v eps2=v target=v" -> one line per key
        std::istringstream fields(line.substr(2));
        std::string token;
        while (fields >> token) {
          if (token == "at") continue;
          out << token << '\n';
        }
        break;
      }
    }
  }

  return out.str();
}

}  // namespace rsgrape
