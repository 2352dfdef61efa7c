#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "rsgrape/config.hpp"
#include "rsgrape/io.hpp"
#include "rsgrape/risk.hpp"
#include "rsgrape/system.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;  // path to the rsgrape binary, passed as argv[1]

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};

RunResult run_cli(const std::string &args, const fs::path &scratch) {
  const fs::path out_file = scratch / "stdout.txt";
  const fs::path err_file = scratch / "stderr.txt";
  const std::string command = g_cli + " " + args + " > " + out_file.string() +
                              " 2> " + err_file.string();
  const int raw = std::system(command.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(raw);
  result.stdout_text = rsgrape::read_file(out_file.string());
  result.stderr_text = rsgrape::read_file(err_file.string());
  return result;
}

fs::path make_scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("rsgrape_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path &path, const std::string &text) {
  std::ofstream out(path);
  out << text;
}

const char *kSmokeConfig = R"([run]
seed = 11

[system]
preset = "three_qubit"

[control]
slices = 8
duration_us = 1.0

[loss]
mu = 1.0

[optimizer]
max_iterations = 3
learning_rate = 0.05

[evaluation]
n_samples = 40
n_batches = 10
grid_points = 3
)";

std::size_t count_data_rows(const std::string &csv) {
  std::size_t rows = 0;
  bool header_seen = false;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

}  // namespace

TEST_CASE("optimize produces the full artifact set") {
  const fs::path dir = make_scratch("optimize");
  write(dir / "exp.toml", kSmokeConfig);
  const RunResult run = run_cli(
      "optimize --config " + (dir / "exp.toml").string() + " --out " +
          (dir / "run").string() + " --threads 1",
      dir);
  CHECK(run.exit_code == 0);
  CHECK(fs::exists(dir / "run" / "trace.csv"));
  CHECK(fs::exists(dir / "run" / "schedule.txt"));
  CHECK(fs::exists(dir / "run" / "checkpoint.txt"));
  CHECK(fs::exists(dir / "run" / "manifest.json"));
  // no stray temporaries after success
  for (const auto &entry : fs::directory_iterator(dir / "run"))
    CHECK(entry.path().extension() != ".tmp");

  const std::string trace =
      rsgrape::read_file((dir / "run" / "trace.csv").string());
  CHECK(count_data_rows(trace) == 3);
  CHECK(trace.rfind("# rsgrape trace", 0) == 0);

  // the saved schedule round-trips into a valid control matrix
  const rsgrape::ControlSchedule schedule =
      rsgrape::load_schedule((dir / "run" / "schedule.txt").string());
  CHECK(schedule.channels() == 6);
  CHECK(schedule.slices() == 8);
}

TEST_CASE("single-iteration trace has exactly one row") {
  const fs::path dir = make_scratch("oneiter");
  std::string config(kSmokeConfig);
  config.replace(config.find("max_iterations = 3"), 18,
                 "max_iterations = 1");
  write(dir / "exp.toml", config);
  const RunResult run = run_cli(
      "optimize --config " + (dir / "exp.toml").string() + " --out " +
          (dir / "run").string(),
      dir);
  CHECK(run.exit_code == 0);
  CHECK(count_data_rows(rsgrape::read_file(
            (dir / "run" / "trace.csv").string())) == 1);
}

TEST_CASE("conflicting sensitivity settings exit with code 2") {
  const fs::path dir = make_scratch("conflict");
  std::string config(kSmokeConfig);
  config.replace(config.find("mu = 1.0"), 8, "mu = 1.0\nr_star = 0.2");
  write(dir / "exp.toml", config);
  const RunResult run = run_cli(
      "optimize --config " + (dir / "exp.toml").string(), dir);
  CHECK(run.exit_code == 2);
  CHECK(run.stderr_text.find("mu") != std::string::npos);
  CHECK(run.stderr_text.find("r_star") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  const fs::path dir = make_scratch("usage");
  CHECK(run_cli("optimize", dir).exit_code == 2);  // missing --config
  CHECK(run_cli("frobnicate", dir).exit_code == 2);
  CHECK(run_cli("optimize --config /does/not/exist.toml", dir).exit_code ==
        2);
}

TEST_CASE("optimize is byte-identical across reruns and thread counts") {
  const fs::path dir = make_scratch("determinism");
  write(dir / "exp.toml", kSmokeConfig);
  const std::string base = "optimize --config " + (dir / "exp.toml").string();
  CHECK(run_cli(base + " --out " + (dir / "a").string() + " --threads 1",
                dir)
            .exit_code == 0);
  CHECK(run_cli(base + " --out " + (dir / "b").string() + " --threads 1",
                dir)
            .exit_code == 0);
  CHECK(run_cli(base + " --out " + (dir / "c").string() + " --threads 8",
                dir)
            .exit_code == 0);
  const std::string a = rsgrape::read_file((dir / "a" / "trace.csv").string());
  const std::string b = rsgrape::read_file((dir / "b" / "trace.csv").string());
  const std::string c = rsgrape::read_file((dir / "c" / "trace.csv").string());
  CHECK(a == b);
  CHECK(a == c);
  CHECK(rsgrape::read_file((dir / "a" / "schedule.txt").string()) ==
        rsgrape::read_file((dir / "c" / "schedule.txt").string()));
}

TEST_CASE("seed override changes the trajectory") {
  const fs::path dir = make_scratch("seed");
  write(dir / "exp.toml", kSmokeConfig);
  const std::string base = "optimize --config " + (dir / "exp.toml").string();
  CHECK(run_cli(base + " --out " + (dir / "a").string(), dir).exit_code == 0);
  CHECK(run_cli(base + " --out " + (dir / "b").string() + " --seed 999", dir)
            .exit_code == 0);
  CHECK(rsgrape::read_file((dir / "a" / "trace.csv").string()) !=
        rsgrape::read_file((dir / "b" / "trace.csv").string()));
}

TEST_CASE("evaluate and scan validate the schedule shape") {
  const fs::path dir = make_scratch("shape");
  write(dir / "exp.toml", kSmokeConfig);
  // a 2-channel schedule cannot drive the 6-channel preset
  rsgrape::ControlSchedule bad = rsgrape::ControlSchedule::zeros(2, 8, 1.0);
  rsgrape::save_schedule(bad, (dir / "bad.txt").string(), "cyclic", {});
  const RunResult run = run_cli(
      "evaluate --config " + (dir / "exp.toml").string() + " --schedule " +
          (dir / "bad.txt").string() + " --out " + (dir / "run").string(),
      dir);
  CHECK(run.exit_code == 2);
}

TEST_CASE("evaluate, scan and report join into a consistent run directory") {
  const fs::path dir = make_scratch("pipeline");
  write(dir / "exp.toml", kSmokeConfig);
  const std::string config_arg = " --config " + (dir / "exp.toml").string();
  const std::string out_arg = " --out " + (dir / "run").string();
  REQUIRE(run_cli("optimize" + config_arg + out_arg, dir).exit_code == 0);
  const std::string schedule_arg =
      " --schedule " + (dir / "run" / "schedule.txt").string();

  CHECK(run_cli("evaluate" + config_arg + schedule_arg + out_arg +
                    " --threads 2",
                dir)
            .exit_code == 0);
  CHECK(fs::exists(dir / "run" / "cdf.csv"));
  CHECK(fs::exists(dir / "run" / "diversity.csv"));
  CHECK(fs::exists(dir / "run" / "summary.csv"));
  CHECK(count_data_rows(rsgrape::read_file(
            (dir / "run" / "cdf.csv").string())) == 40);

  CHECK(run_cli("scan" + config_arg + schedule_arg + out_arg, dir)
            .exit_code == 0);
  const std::string landscape =
      rsgrape::read_file((dir / "run" / "landscape.csv").string());
  CHECK(count_data_rows(landscape) == 9);  // 3x3 grid

  const RunResult report = run_cli("report " + (dir / "run").string(), dir);
  CHECK(report.exit_code == 0);
  CHECK(report.stdout_text.find("[optimize]") != std::string::npos);
  CHECK(report.stdout_text.find("[evaluate]") != std::string::npos);
  CHECK(report.stdout_text.find("[scan]") != std::string::npos);
  CHECK(report.stdout_text.find("final_j_mean=") != std::string::npos);
  CHECK(report.stdout_text.find("q99=") != std::string::npos);
  CHECK(report.stdout_text.find("max_infidelity=") != std::string::npos);
}

TEST_CASE("scan's 1x1 grid equals a direct infidelity call") {
  const fs::path dir = make_scratch("scan1");
  std::string config(kSmokeConfig);
  config.replace(config.find("grid_points = 3"), 15,
                 "grid_points = 1\ngrid_lo = 0.05\ngrid_hi = 0.05");
  write(dir / "exp.toml", config);
  const std::string config_arg = " --config " + (dir / "exp.toml").string();
  const std::string out_arg = " --out " + (dir / "run").string();
  REQUIRE(run_cli("optimize" + config_arg + out_arg, dir).exit_code == 0);
  REQUIRE(run_cli("scan" + config_arg + " --schedule " +
                      (dir / "run" / "schedule.txt").string() + out_arg,
                  dir)
              .exit_code == 0);

  // recompute through the library
  const rsgrape::ExperimentConfig parsed =
      rsgrape::parse_config_file((dir / "exp.toml").string());
  const rsgrape::SystemModel model = rsgrape::build_system_model(parsed);
  const rsgrape::ControlSchedule schedule =
      rsgrape::load_schedule((dir / "run" / "schedule.txt").string());
  rsgrape::UncertaintySample eps(2);
  eps << 0.05, 0.05;
  const double expected = rsgrape::sample_infidelity(
      model, schedule, eps, rsgrape::build_target(parsed),
      parsed.loss.variant);

  const std::string landscape =
      rsgrape::read_file((dir / "run" / "landscape.csv").string());
  std::istringstream in(landscape);
  std::string line, data;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("eps1", 0) == 0)
      continue;
    data = line;
  }
  const auto last_comma = data.rfind(',');
  CHECK(std::stod(data.substr(last_comma + 1)) ==
        doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("scan beyond the declared support warns but proceeds") {
  const fs::path dir = make_scratch("scanwide");
  std::string config(kSmokeConfig);
  config.replace(config.find("grid_points = 3"), 15,
                 "grid_points = 3\ngrid_lo = -0.5\ngrid_hi = 0.5");
  write(dir / "exp.toml", config);
  const std::string config_arg = " --config " + (dir / "exp.toml").string();
  const std::string out_arg = " --out " + (dir / "run").string();
  REQUIRE(run_cli("optimize" + config_arg + out_arg, dir).exit_code == 0);
  const RunResult run = run_cli(
      "scan" + config_arg + " --schedule " +
          (dir / "run" / "schedule.txt").string() + out_arg,
      dir);
  CHECK(run.exit_code == 0);
  CHECK(run.stderr_text.find("warning") != std::string::npos);
  CHECK(fs::exists(dir / "run" / "landscape.csv"));
}

TEST_CASE("report needs a manifest") {
  const fs::path dir = make_scratch("noreport");
  fs::create_directories(dir / "empty");
  CHECK(run_cli("report " + (dir / "empty").string(), dir).exit_code == 2);
}

TEST_CASE("reports of identical runs are byte-identical") {
  const fs::path dir = make_scratch("repeq");
  write(dir / "exp.toml", kSmokeConfig);
  const std::string config_arg = " --config " + (dir / "exp.toml").string();
  for (const char *sub : {"a", "b"}) {
    const std::string out_arg = " --out " + (dir / sub).string();
    REQUIRE(run_cli("optimize" + config_arg + out_arg, dir).exit_code == 0);
    REQUIRE(run_cli("report " + (dir / sub).string(), dir).exit_code == 0);
  }
  CHECK(rsgrape::read_file((dir / "a" / "report.txt").string()) ==
        rsgrape::read_file((dir / "b" / "report.txt").string()));
}

TEST_CASE("environment variable overrides the output directory") {
  const fs::path dir = make_scratch("envdir");
  write(dir / "exp.toml", kSmokeConfig);
  const fs::path env_out = dir / "from_env";
  setenv("RSGRAPE_OUTPUT_DIR", env_out.string().c_str(), 1);
  const RunResult run = run_cli(
      "optimize --config " + (dir / "exp.toml").string(), dir);
  unsetenv("RSGRAPE_OUTPUT_DIR");
  CHECK(run.exit_code == 0);
  CHECK(fs::exists(env_out / "trace.csv"));
}

int main(int argc, char **argv) {
  std::vector<const char *> args;
  args.push_back(argv[0]);
  for (int i = 1; i < argc; ++i) {
    if (g_cli.empty() && argv[i][0] != '-') {
      g_cli = argv[i];  // first bare argument names the binary under test
      continue;
    }
    args.push_back(argv[i]);
  }
  if (g_cli.empty()) g_cli = "./tools/rsgrape";
  doctest::Context context(static_cast<int>(args.size()),
                           const_cast<char **>(args.data()));
  return context.run();
}
