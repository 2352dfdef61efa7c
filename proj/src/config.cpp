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
#include "rsgrape/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rsgrape/errors.hpp"
#include "rsgrape/io.hpp"
#include "rsgrape/rng.hpp"

namespace rsgrape {

namespace {

constexpr std::uint64_t kInitSeedSalt = UINT64_C(0x5345454449);

// ---------------------------------------------------------------------------
// Structured-text parser: [sections] of key = value lines, where a value is
// a quoted string, a number, a boolean, an inline table { k = v, ... } or an
// array [ v, ... ] that may span lines.

struct Value {
  enum class Type { String, Number, Bool, Table, Array };
  Type type = Type::Number;
  std::string str;
  std::string raw;  // numeric token as written (exact u64 round-trip)
  double num = 0.0;
  bool boolean = false;
  std::vector<std::pair<std::string, Value>> table;
  std::vector<Value> array;
  int line = 0;
};

using KeyList = std::vector<std::pair<std::string, Value>>;

struct RawConfig {
  std::string source;
  std::vector<std::pair<std::string, KeyList>> sections;
};

[[noreturn]] void fail(const std::string &source, int line,
                       const std::string &msg) {
  std::ostringstream out;
  out << source << ':' << line << ": " << msg;
  throw ConfigError(out.str());
}

struct Cursor {
  const std::string &text;
  std::size_t pos = 0;
  int line = 1;
  const std::string &source;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  void skip_space_and_comments(bool cross_lines) {
    while (!done()) {
      const char c = peek();
      if (c == '#') {
        while (!done() && peek() != '\n') take();
      } else if (c == ' ' || c == '\t' || c == '\r') {
        take();
      } else if (c == '\n' && cross_lines) {
        take();
      } else {
        break;
      }
    }
  }
};

std::string parse_bare_key(Cursor &cur) {
  std::string key;
  while (!cur.done() &&
         (std::isalnum(static_cast<unsigned char>(cur.peek())) ||
          cur.peek() == '_')) {
    key += cur.take();
  }
  if (key.empty()) fail(cur.source, cur.line, "expected a key");
  return key;
}

Value parse_value(Cursor &cur);

std::string parse_quoted(Cursor &cur) {
  cur.take();  // opening quote
  std::string out;
  while (!cur.done()) {
    const char c = cur.take();
    if (c == '"') return out;
    if (c == '\\' && !cur.done()) {
      const char esc = cur.take();
      out += esc == 'n' ? '\n' : esc;
      continue;
    }
    if (c == '\n') fail(cur.source, cur.line, "unterminated string");
    out += c;
  }
  fail(cur.source, cur.line, "unterminated string");
}

Value parse_table(Cursor &cur) {
  Value value;
  value.type = Value::Type::Table;
  value.line = cur.line;
  cur.take();  // '{'
  cur.skip_space_and_comments(true);
  if (!cur.done() && cur.peek() == '}') {
    cur.take();
    return value;
  }
  while (true) {
    cur.skip_space_and_comments(true);
    const std::string key = parse_bare_key(cur);
    cur.skip_space_and_comments(true);
    if (cur.done() || cur.take() != '=')
      fail(cur.source, cur.line, "expected '=' after '" + key + "'");
    cur.skip_space_and_comments(true);
    value.table.emplace_back(key, parse_value(cur));
    cur.skip_space_and_comments(true);
    if (cur.done()) fail(cur.source, cur.line, "unterminated inline table");
    const char c = cur.take();
    if (c == '}') return value;
    if (c != ',') fail(cur.source, cur.line, "expected ',' or '}'");
    cur.skip_space_and_comments(true);
    if (!cur.done() && cur.peek() == '}') {  // trailing comma
      cur.take();
      return value;
    }
  }
}

Value parse_array(Cursor &cur) {
  Value value;
  value.type = Value::Type::Array;
  value.line = cur.line;
  cur.take();  // '['
  while (true) {
    cur.skip_space_and_comments(true);
    if (cur.done()) fail(cur.source, cur.line, "unterminated array");
    if (cur.peek() == ']') {
      cur.take();
      return value;
    }
    value.array.push_back(parse_value(cur));
    cur.skip_space_and_comments(true);
    if (cur.done()) fail(cur.source, cur.line, "unterminated array");
    const char c = cur.peek();
    if (c == ',') {
      cur.take();
    } else if (c != ']') {
      fail(cur.source, cur.line, "expected ',' or ']'");
    }
  }
}

Value parse_value(Cursor &cur) {
  cur.skip_space_and_comments(true);
  if (cur.done()) fail(cur.source, cur.line, "expected a value");
  const char c = cur.peek();
  if (c == '"') {
    Value value;
    value.type = Value::Type::String;
    value.line = cur.line;
    value.str = parse_quoted(cur);
    return value;
  }
  if (c == '{') return parse_table(cur);
  if (c == '[') return parse_array(cur);

  std::string token;
  while (!cur.done()) {
    const char t = cur.peek();
    if (std::isalnum(static_cast<unsigned char>(t)) || t == '_' || t == '.' ||
        t == '+' || t == '-') {
      token += cur.take();
    } else {
      break;
    }
  }
  Value value;
  value.line = cur.line;
  if (token == "true" || token == "false") {
    value.type = Value::Type::Bool;
    value.boolean = token == "true";
    return value;
  }
  char *end = nullptr;
  value.num = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size())
    fail(cur.source, cur.line, "cannot parse value '" + token + "'");
  value.type = Value::Type::Number;
  value.raw = token;
  return value;
}

RawConfig parse_raw(const std::string &text, const std::string &source) {
  RawConfig raw;
  raw.source = source;
  raw.sections.emplace_back("", KeyList{});  // top-level keys
  Cursor cur{text, 0, 1, source};
  while (true) {
    cur.skip_space_and_comments(true);
    if (cur.done()) break;
    if (cur.peek() == '[') {
      cur.take();
      const std::string name = parse_bare_key(cur);
      cur.skip_space_and_comments(false);
      if (cur.done() || cur.take() != ']')
        fail(source, cur.line, "expected ']' after section name");
      for (const auto &[existing, keys] : raw.sections) {
        (void)keys;
        if (existing == name)
          fail(source, cur.line, "duplicate section [" + name + "]");
      }
      raw.sections.emplace_back(name, KeyList{});
      continue;
    }
    const int line = cur.line;
    const std::string key = parse_bare_key(cur);
    cur.skip_space_and_comments(false);
    if (cur.done() || cur.take() != '=')
      fail(source, line, "expected '=' after '" + key + "'");
    Value value = parse_value(cur);
    value.line = line;
    auto &keys = raw.sections.back().second;
    for (const auto &[existing, v] : keys) {
      (void)v;
      if (existing == key)
        fail(source, line, "duplicate key '" + key + "'");
    }
    keys.emplace_back(key, std::move(value));
  }
  return raw;
}

// ---------------------------------------------------------------------------
// Typed access with unknown-key detection.

class SectionReader {
 public:
  SectionReader(const RawConfig &raw, const std::string &name)
      : source_(raw.source), name_(name) {
    for (const auto &[section, keys] : raw.sections)
      if (section == name) keys_ = &keys;
  }

  bool present() const { return keys_ != nullptr; }

  const Value *find(const std::string &key) const {
    if (!keys_) return nullptr;
    for (const auto &[name, value] : *keys_)
      if (name == key) {
        consumed_.insert(key);
        return &value;
      }
    return nullptr;
  }

  [[noreturn]] void fail_key(const Value &value,
                             const std::string &msg) const {
    fail(source_, value.line, "[" + name_ + "] " + msg);
  }

  std::string get_string(const std::string &key,
                         const std::string &fallback) const {
    const Value *value = find(key);
    if (!value) return fallback;
    if (value->type != Value::Type::String)
      fail_key(*value, "'" + key + "' must be a quoted string");
    return value->str;
  }

  double get_number(const std::string &key, double fallback) const {
    const Value *value = find(key);
    if (!value) return fallback;
    if (value->type != Value::Type::Number)
      fail_key(*value, "'" + key + "' must be a number");
    return value->num;
  }

  std::optional<double> get_optional_number(const std::string &key) const {
    const Value *value = find(key);
    if (!value) return std::nullopt;
    if (value->type != Value::Type::Number)
      fail_key(*value, "'" + key + "' must be a number");
    return value->num;
  }

  std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const {
    const Value *value = find(key);
    if (!value) return fallback;
    return as_u64(*value, key);
  }

  std::optional<std::uint64_t> get_optional_u64(const std::string &key) const {
    const Value *value = find(key);
    if (!value) return std::nullopt;
    return as_u64(*value, key);
  }

  std::uint64_t as_u64(const Value &value, const std::string &key) const {
    if (value.type != Value::Type::Number || value.raw.empty() ||
        value.raw.find_first_of(".eE+") != std::string::npos)
      fail_key(value, "'" + key + "' must be a nonnegative integer");
    try {
      return std::stoull(value.raw);
    } catch (const std::exception &) {
      fail_key(value, "'" + key + "' is not a valid integer");
    }
  }

  void check_no_unknown_keys() const {
    if (!keys_) return;
    for (const auto &[key, value] : *keys_) {
      if (consumed_.count(key)) continue;
      if (key == "uncertainty" && !name_.empty())
        fail(source_, value.line,
             "'uncertainty' is a top-level key; move it above the first "
             "[section]");
      fail(source_, value.line, "[" + name_ + "] unknown key '" + key + "'");
    }
  }

  const std::string &source() const { return source_; }
  const std::string &name() const { return name_; }

 private:
  const KeyList *keys_ = nullptr;
  std::string source_;
  std::string name_;
  mutable std::set<std::string> consumed_;
};

double table_number(const SectionReader &reader, const Value &table,
                    const std::string &key, const char *context) {
  for (const auto &[name, value] : table.table)
    if (name == key) {
      if (value.type != Value::Type::Number)
        reader.fail_key(value, std::string(context) + ": '" + key +
                                   "' must be a number");
      return value.num;
    }
  reader.fail_key(table,
                  std::string(context) + ": missing key '" + key + "'");
}

}  // namespace

std::vector<std::pair<int, PauliAxis>> parse_pauli_string(
    const std::string &text) {
  std::vector<std::pair<int, PauliAxis>> factors;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    if (token.size() < 2)
      throw ConfigError("pauli term '" + token + "': expected AXIS+INDEX");
    PauliAxis axis;
    switch (std::toupper(static_cast<unsigned char>(token[0]))) {
      case 'X':
        axis = PauliAxis::X;
        break;
      case 'Y':
        axis = PauliAxis::Y;
        break;
      case 'Z':
        axis = PauliAxis::Z;
        break;
      default:
        throw ConfigError("pauli term '" + token + "': axis must be X, Y or Z");
    }
    for (std::size_t i = 1; i < token.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(token[i])))
        throw ConfigError("pauli term '" + token + "': bad qubit index");
    factors.emplace_back(std::stoi(token.substr(1)), axis);
  }
  if (factors.empty()) throw ConfigError("empty pauli string");
  return factors;
}

namespace {

std::vector<PauliTermConfig> parse_term_array(const SectionReader &reader,
                                              const Value &array,
                                              const char *context,
                                              bool with_coefficient) {
  if (array.type != Value::Type::Array)
    reader.fail_key(array, std::string(context) + " must be an array");
  std::vector<PauliTermConfig> terms;
  for (const Value &entry : array.array) {
    if (entry.type != Value::Type::Table)
      reader.fail_key(entry, std::string(context) +
                                 ": each term must be an inline table");
    PauliTermConfig term;
    bool have_paulis = false;
    for (const auto &[key, value] : entry.table) {
      if (key == "paulis") {
        if (value.type != Value::Type::String)
          reader.fail_key(value, "'paulis' must be a string");
        term.paulis = value.str;
        have_paulis = true;
      } else if (key == "coeff_mhz" && with_coefficient) {
        if (value.type != Value::Type::Number)
          reader.fail_key(value, "'coeff_mhz' must be a number");
        term.coefficient = value.num;
      } else if (key == "uncertainty" && with_coefficient) {
        term.uncertainty = reader.as_u64(value, "uncertainty");
        if (*term.uncertainty < 1)
          reader.fail_key(value, "'uncertainty' indices are 1-based");
      } else {
        reader.fail_key(value, std::string(context) + ": unknown term key '" +
                                   key + "'");
      }
    }
    if (!have_paulis)
      reader.fail_key(entry, std::string(context) + ": term needs 'paulis'");
    terms.push_back(std::move(term));
  }
  return terms;
}

DistributionSpec parse_uncertainty(const SectionReader &reader,
                                   const Value &array) {
  if (array.type != Value::Type::Array)
    reader.fail_key(array, "'uncertainty' must be an array of laws");
  DistributionSpec spec;
  for (const Value &entry : array.array) {
    if (entry.type != Value::Type::Table)
      reader.fail_key(entry, "each uncertainty law must be an inline table");
    std::string law = "uniform";
    for (const auto &[key, value] : entry.table)
      if (key == "law") {
        if (value.type != Value::Type::String)
          reader.fail_key(value, "'law' must be a string");
        law = value.str;
      }
    DimensionLaw dim;
    if (law == "uniform") {
      dim.kind = DimensionLaw::Kind::Uniform;
      dim.a = table_number(reader, entry, "lo", "uniform law");
      dim.b = table_number(reader, entry, "hi", "uniform law");
    } else if (law == "gaussian") {
      dim.kind = DimensionLaw::Kind::Gaussian;
      dim.a = table_number(reader, entry, "mean", "gaussian law");
      dim.b = table_number(reader, entry, "stddev", "gaussian law");
    } else {
      reader.fail_key(entry, "unknown law '" + law + "'");
    }
    for (const auto &[key, value] : entry.table) {
      const bool known =
          key == "law" ||
          (law == "uniform" && (key == "lo" || key == "hi")) ||
          (law == "gaussian" && (key == "mean" || key == "stddev"));
      if (!known)
        reader.fail_key(value, "unknown uncertainty key '" + key + "'");
    }
    spec.dims.push_back(dim);
  }
  if (spec.dims.empty())
    reader.fail_key(array, "'uncertainty' must declare at least one law");
  try {
    validate(spec);
  } catch (const std::exception &err) {
    reader.fail_key(array, err.what());
  }
  return spec;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string &text,
                                   const std::string &source_name) {
  const RawConfig raw = parse_raw(text, source_name);

  static const std::set<std::string> known_sections = {
      "",     "run",  "system",    "target",
      "control", "loss", "optimizer", "evaluation"};
  for (const auto &[name, keys] : raw.sections) {
    (void)keys;
    if (!known_sections.count(name))
      throw ConfigError(source_name + ": unknown section [" + name + "]");
  }

  ExperimentConfig config;

  SectionReader top(raw, "");
  SectionReader run(raw, "run");
  SectionReader system(raw, "system");
  SectionReader target(raw, "target");
  SectionReader control(raw, "control");
  SectionReader loss(raw, "loss");
  SectionReader optimizer(raw, "optimizer");
  SectionReader evaluation(raw, "evaluation");

  // [run]
  config.run.seed = run.get_u64("seed", 0);
  config.run.output_dir = run.get_string("output_dir", "out");

  // [system]
  config.system.preset = system.get_string("preset", "");
  const std::string convention =
      system.get_string("frequency_convention", "cyclic");
  if (convention == "cyclic")
    config.system.convention = FrequencyConvention::Cyclic;
  else if (convention == "angular")
    config.system.convention = FrequencyConvention::Angular;
  else
    throw ConfigError(source_name +
                      ": [system] frequency_convention must be cyclic|angular");
  config.system.n_qubits =
      static_cast<int>(system.get_u64("n_qubits", 0));
  if (const Value *terms = system.find("drift"))
    config.system.drift = parse_term_array(system, *terms, "drift", true);
  if (const Value *terms = system.find("controls")) {
    for (auto &term :
         parse_term_array(system, *terms, "controls", false))
      config.system.control_paulis.push_back(term.paulis);
  }
  system.check_no_unknown_keys();
  if (config.system.preset.empty()) {
    if (config.system.n_qubits < 1 || config.system.drift.empty() ||
        config.system.control_paulis.empty())
      throw ConfigError(source_name +
                        ": [system] needs either preset = \"three_qubit\" or "
                        "n_qubits, drift and controls");
  } else if (config.system.preset != "three_qubit") {
    throw ConfigError(source_name + ": [system] unknown preset '" +
                      config.system.preset + "'");
  }

  // top-level uncertainty = [ { law = ... }, ... ]
  if (const Value *laws = top.find("uncertainty")) {
    config.uncertainty = parse_uncertainty(top, *laws);
  } else if (config.system.preset == "three_qubit") {
    config.uncertainty = DistributionSpec::uniform_box(2, -0.2, 0.2);
  } else {
    throw ConfigError(source_name + ": missing top-level 'uncertainty' list");
  }
  top.check_no_unknown_keys();

  // [target]
  config.target.gate = target.get_string("gate", "");
  config.target.matrix_file = target.get_string("matrix_file", "");
  target.check_no_unknown_keys();
  if (config.target.gate.empty() && config.target.matrix_file.empty()) {
    if (config.system.preset == "three_qubit")
      config.target.gate = "toffoli";
    else
      throw ConfigError(source_name +
                        ": [target] needs gate or matrix_file");
  }
  if (!config.target.gate.empty() && !config.target.matrix_file.empty())
    throw ConfigError(
        source_name +
        ": [target] sets both gate and matrix_file; set exactly one");

  // [control]
  config.control.channels =
      static_cast<Eigen::Index>(control.get_u64("channels", 0));
  config.control.slices =
      static_cast<Eigen::Index>(control.get_u64("slices", 100));
  config.control.duration_us = control.get_number("duration_us", 1.0);
  config.control.initial_pulse =
      control.get_string("initial_pulse", "sinusoidal");
  if (config.control.initial_pulse != "sinusoidal" &&
      config.control.initial_pulse != "zero")
    throw ConfigError(source_name +
                      ": [control] initial_pulse must be sinusoidal|zero");
  config.control.initial_pulse_seed =
      control.get_optional_u64("initial_pulse_seed");
  config.control.initial_pulse_seed_explicit =
      config.control.initial_pulse_seed.has_value();
  if (!config.control.initial_pulse_seed)
    config.control.initial_pulse_seed = derived_pulse_seed(config.run.seed);
  config.control.amplitude_clip =
      control.get_optional_number("amplitude_clip");
  control.check_no_unknown_keys();
  if (config.control.slices < 1)
    throw ConfigError(source_name + ": [control] slices must be >= 1");
  if (!(config.control.duration_us > 0.0))
    throw ConfigError(source_name + ": [control] duration_us must be > 0");

  // [loss]
  const std::string variant =
      loss.get_string("variant", "phase_insensitive");
  if (variant == "phase_sensitive")
    config.loss.variant = InfidelityVariant::PhaseSensitive;
  else if (variant == "phase_insensitive")
    config.loss.variant = InfidelityVariant::PhaseInsensitive;
  else
    throw ConfigError(
        source_name +
        ": [loss] variant must be phase_sensitive|phase_insensitive");
  const std::string family = loss.get_string("utility", "exponential");
  if (family == "exponential")
    config.loss.family = UtilityFamily::Exponential;
  else if (family == "hara")
    config.loss.family = UtilityFamily::Hara;
  else
    throw ConfigError(source_name +
                      ": [loss] utility must be exponential|hara");
  config.loss.mu = loss.get_optional_number("mu");
  config.loss.r_star = loss.get_optional_number("r_star");
  loss.check_no_unknown_keys();
  if (config.loss.mu && config.loss.r_star)
    throw ConfigError(source_name +
                      ": [loss] sets both mu and r_star; set exactly one");
  if (!config.loss.mu && !config.loss.r_star)
    throw ConfigError(source_name + ": [loss] needs mu or r_star");

  // [optimizer]
  if (const Value *algorithm = optimizer.find("algorithm")) {
    if (algorithm->type != Value::Type::String)
      optimizer.fail_key(*algorithm, "'algorithm' must be a string");
    if (algorithm->str == "rs_fixed")
      config.optimizer.algorithm = Algorithm::RsFixed;
    else if (algorithm->str == "rs_adaptive")
      config.optimizer.algorithm = Algorithm::RsAdaptive;
    else
      optimizer.fail_key(*algorithm,
                         "algorithm must be rs_fixed|rs_adaptive");
  } else {
    config.optimizer.algorithm =
        config.loss.mu ? Algorithm::RsFixed : Algorithm::RsAdaptive;
  }
  if (*config.optimizer.algorithm == Algorithm::RsFixed && !config.loss.mu)
    throw ConfigError(source_name +
                      ": [optimizer] algorithm rs_fixed needs [loss] mu");
  if (*config.optimizer.algorithm == Algorithm::RsAdaptive &&
      !config.loss.r_star)
    throw ConfigError(
        source_name +
        ": [optimizer] algorithm rs_adaptive needs [loss] r_star");

  config.optimizer.batch_size =
      static_cast<std::size_t>(optimizer.get_u64("batch_size", 10));
  config.optimizer.learning_rate =
      optimizer.get_number("learning_rate", 0.01);
  config.optimizer.learning_rate_final =
      optimizer.get_optional_number("learning_rate_final");
  config.optimizer.beta1 = optimizer.get_number("adam_beta1", 0.9);
  config.optimizer.beta2 = optimizer.get_number("adam_beta2", 0.999);
  config.optimizer.adam_epsilon =
      optimizer.get_number("adam_epsilon", 1e-8);
  config.optimizer.max_iterations = static_cast<std::size_t>(
      optimizer.get_u64("max_iterations", 10000));
  config.optimizer.target_loss =
      optimizer.get_optional_number("target_loss");
  config.optimizer.detail_stride =
      static_cast<std::size_t>(optimizer.get_u64("detail_stride", 10));
  config.optimizer.checkpoint_stride = static_cast<std::size_t>(
      optimizer.get_u64("checkpoint_stride", 1000));
  const std::string rule = optimizer.get_string("update_rule", "adam");
  if (rule == "adam")
    config.optimizer.update_rule = UpdateRule::Adam;
  else if (rule == "sgd")
    config.optimizer.update_rule = UpdateRule::Sgd;
  else
    throw ConfigError(source_name +
                      ": [optimizer] update_rule must be adam|sgd");
  optimizer.check_no_unknown_keys();

  // [evaluation]
  config.evaluation.n_samples =
      static_cast<std::size_t>(evaluation.get_u64("n_samples", 100000));
  config.evaluation.n_batches =
      static_cast<std::size_t>(evaluation.get_u64("n_batches", 100000));
  config.evaluation.histogram_bins =
      static_cast<std::size_t>(evaluation.get_u64("histogram_bins", 100));
  config.evaluation.grid_points =
      static_cast<std::size_t>(evaluation.get_u64("grid_points", 41));
  config.evaluation.grid_lo = evaluation.get_optional_number("grid_lo");
  config.evaluation.grid_hi = evaluation.get_optional_number("grid_hi");
  config.evaluation.landscape_target =
      evaluation.get_number("landscape_target", 1e-4);
  evaluation.check_no_unknown_keys();
  run.check_no_unknown_keys();

  // cross-section consistency
  const std::size_t dims = config.uncertainty.dimension();
  for (const auto &term : config.system.drift)
    if (term.uncertainty && *term.uncertainty > dims) {
      std::ostringstream msg;
      msg << source_name << ": [system] drift term references uncertainty "
          << *term.uncertainty << " but only " << dims << " are declared";
      throw ConfigError(msg.str());
    }
  if (config.system.preset == "three_qubit") {
    if (dims != 2)
      throw ConfigError(source_name +
                        ": preset three_qubit needs exactly 2 uncertainty "
                        "dimensions");
    if (config.control.channels != 0 && config.control.channels != 6)
      throw ConfigError(source_name +
                        ": preset three_qubit has 6 control channels");
    config.control.channels = 6;
  }
  if (config.optimizer.batch_size < 1)
    throw ConfigError(source_name + ": [optimizer] batch_size must be >= 1");
  if (config.loss.r_star) {
    const double lo =
        1.0 / static_cast<double>(config.optimizer.batch_size);
    if (*config.loss.r_star < lo - 1e-12 || *config.loss.r_star > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << source_name << ": [loss] r_star " << *config.loss.r_star
          << " outside [1/M, 1] = [" << lo << ", 1]";
      throw ConfigError(msg.str());
    }
  }
  if (config.loss.mu) {
    const double floor =
        config.loss.family == UtilityFamily::Hara ? 1.0 : 0.0;
    if (*config.loss.mu < floor)
      throw ConfigError(source_name + ": [loss] mu below the family's range");
  }

  return config;
}

ExperimentConfig parse_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(),
                           std::filesystem::path(path).filename().string());
}

namespace {

std::string quoted(const std::string &text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

void write_terms(std::ostringstream &out, const char *key,
                 const std::vector<PauliTermConfig> &terms,
                 bool with_coefficient) {
  out << key << " = [";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out << ',';
    out << " { paulis = " << quoted(terms[i].paulis);
    if (with_coefficient) {
      out << ", coeff_mhz = " << format_g17(terms[i].coefficient);
      if (terms[i].uncertainty)
        out << ", uncertainty = " << *terms[i].uncertainty;
    }
    out << " }";
  }
  out << " ]\n";
}

}  // namespace

std::string canonical_config_text(const ExperimentConfig &config) {
  std::ostringstream out;
  out << "uncertainty = [";
  for (std::size_t i = 0; i < config.uncertainty.dims.size(); ++i) {
    const auto &law = config.uncertainty.dims[i];
    if (i) out << ',';
    if (law.kind == DimensionLaw::Kind::Uniform)
      out << " { law = \"uniform\", lo = " << format_g17(law.a)
          << ", hi = " << format_g17(law.b) << " }";
    else
      out << " { law = \"gaussian\", mean = " << format_g17(law.a)
          << ", stddev = " << format_g17(law.b) << " }";
  }
  out << " ]\n";

  // output_dir is a runtime location, not an experiment parameter; leaving
  // it out keeps the hash identical across runs redirected with --out.
  out << "\n[run]\n";
  out << "seed = " << config.run.seed << '\n';

  out << "\n[system]\n";
  if (!config.system.preset.empty())
    out << "preset = " << quoted(config.system.preset) << '\n';
  out << "frequency_convention = "
      << (config.system.convention == FrequencyConvention::Cyclic
              ? "\"cyclic\""
              : "\"angular\"")
      << '\n';
  if (config.system.preset.empty()) {
    out << "n_qubits = " << config.system.n_qubits << '\n';
    write_terms(out, "drift", config.system.drift, true);
    std::vector<PauliTermConfig> controls;
    for (const auto &paulis : config.system.control_paulis)
      controls.push_back({paulis, 1.0, std::nullopt});
    write_terms(out, "controls", controls, false);
  }

  out << "\n[target]\n";
  if (!config.target.gate.empty())
    out << "gate = " << quoted(config.target.gate) << '\n';
  else
    out << "matrix_file = " << quoted(config.target.matrix_file) << '\n';

  out << "\n[control]\n";
  if (config.control.channels != 0)
    out << "channels = " << config.control.channels << '\n';
  out << "slices = " << config.control.slices << '\n';
  out << "duration_us = " << format_g17(config.control.duration_us) << '\n';
  out << "initial_pulse = " << quoted(config.control.initial_pulse) << '\n';
  out << "initial_pulse_seed = " << *config.control.initial_pulse_seed
      << '\n';
  if (config.control.amplitude_clip)
    out << "amplitude_clip = " << format_g17(*config.control.amplitude_clip)
        << '\n';

  out << "\n[loss]\n";
  out << "variant = "
      << (config.loss.variant == InfidelityVariant::PhaseSensitive
              ? "\"phase_sensitive\""
              : "\"phase_insensitive\"")
      << '\n';
  out << "utility = "
      << (config.loss.family == UtilityFamily::Exponential ? "\"exponential\""
                                                           : "\"hara\"")
      << '\n';
  if (config.loss.mu) out << "mu = " << format_g17(*config.loss.mu) << '\n';
  if (config.loss.r_star)
    out << "r_star = " << format_g17(*config.loss.r_star) << '\n';

  out << "\n[optimizer]\n";
  out << "algorithm = "
      << (*config.optimizer.algorithm == Algorithm::RsFixed
              ? "\"rs_fixed\""
              : "\"rs_adaptive\"")
      << '\n';
  out << "batch_size = " << config.optimizer.batch_size << '\n';
  out << "learning_rate = " << format_g17(config.optimizer.learning_rate)
      << '\n';
  if (config.optimizer.learning_rate_final)
    out << "learning_rate_final = "
        << format_g17(*config.optimizer.learning_rate_final) << '\n';
  out << "adam_beta1 = " << format_g17(config.optimizer.beta1) << '\n';
  out << "adam_beta2 = " << format_g17(config.optimizer.beta2) << '\n';
  out << "adam_epsilon = " << format_g17(config.optimizer.adam_epsilon)
      << '\n';
  out << "max_iterations = " << config.optimizer.max_iterations << '\n';
  if (config.optimizer.target_loss)
    out << "target_loss = " << format_g17(*config.optimizer.target_loss)
        << '\n';
  out << "detail_stride = " << config.optimizer.detail_stride << '\n';
  out << "checkpoint_stride = " << config.optimizer.checkpoint_stride << '\n';
  out << "update_rule = "
      << (config.optimizer.update_rule == UpdateRule::Adam ? "\"adam\""
                                                           : "\"sgd\"")
      << '\n';

  out << "\n[evaluation]\n";
  out << "n_samples = " << config.evaluation.n_samples << '\n';
  out << "n_batches = " << config.evaluation.n_batches << '\n';
  out << "histogram_bins = " << config.evaluation.histogram_bins << '\n';
  out << "grid_points = " << config.evaluation.grid_points << '\n';
  if (config.evaluation.grid_lo)
    out << "grid_lo = " << format_g17(*config.evaluation.grid_lo) << '\n';
  if (config.evaluation.grid_hi)
    out << "grid_hi = " << format_g17(*config.evaluation.grid_hi) << '\n';
  out << "landscape_target = "
      << format_g17(config.evaluation.landscape_target) << '\n';

  return out.str();
}

std::uint64_t derived_pulse_seed(std::uint64_t master_seed) {
  return rng::combine(rng::splitmix64(master_seed), kInitSeedSalt);
}

std::string config_hash(const ExperimentConfig &config) {
  const std::string text = canonical_config_text(config);
  std::uint64_t hash = UINT64_C(0xcbf29ce484222325);
  for (unsigned char c : text) {
    hash ^= c;
    hash *= UINT64_C(0x100000001b3);
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

SystemModel build_system_model(const ExperimentConfig &config) {
  if (config.system.preset == "three_qubit")
    return three_qubit_preset(config.system.convention);

  const int n = config.system.n_qubits;
  SystemModel model;
  model.dim = Eigen::Index{1} << n;
  const bool cyclic =
      config.system.convention == FrequencyConvention::Cyclic;
  constexpr double two_pi = 6.283185307179586476925287;
  for (const auto &term : config.system.drift) {
    DriftTerm drift;
    drift.matrix = pauli_string(parse_pauli_string(term.paulis), n);
    drift.coefficient =
        cyclic ? two_pi * term.coefficient : term.coefficient;
    if (term.uncertainty) drift.uncertainty_index = *term.uncertainty - 1;
    model.drift_terms.push_back(std::move(drift));
  }
  for (const auto &paulis : config.system.control_paulis)
    model.control_terms.push_back(
        pauli_string(parse_pauli_string(paulis), n));
  validate(model);
  return model;
}

namespace {

ComplexMatrix load_matrix_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("target: cannot open matrix file " + path);
  Eigen::Index n = 0;
  if (!(in >> n) || n < 2)
    throw ConfigError("target: matrix file must start with the dimension");
  ComplexMatrix u(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im))
        throw ConfigError("target: matrix file truncated at row " +
                          std::to_string(i + 1));
      u(i, j) = Complex(re, im);
    }
  if (!is_unitary(u, 1e-8))
    throw ConfigError("target: matrix in " + path + " is not unitary");
  return u;
}

}  // namespace

ComplexMatrix build_target(const ExperimentConfig &config,
                           const std::string &base_dir) {
  if (config.target.gate == "toffoli") return toffoli_gate();
  if (!config.target.gate.empty())
    throw ConfigError("target: unknown gate '" + config.target.gate + "'");
  std::filesystem::path path(config.target.matrix_file);
  if (path.is_relative() && !base_dir.empty())
    path = std::filesystem::path(base_dir) / path;
  return load_matrix_file(path.string());
}

ControlSchedule build_initial_schedule(const ExperimentConfig &config) {
  Eigen::Index channels = config.control.channels;
  if (channels == 0)
    channels =
        static_cast<Eigen::Index>(config.system.control_paulis.size());
  if (channels < 1)
    throw ConfigError("control: cannot determine the channel count");
  if (config.control.initial_pulse == "zero")
    return ControlSchedule::zeros(channels, config.control.slices,
                                  config.control.duration_us);
  return initial_schedule(*config.control.initial_pulse_seed, channels,
                          config.control.slices, config.control.duration_us);
}

OptimizerConfig build_optimizer_config(const ExperimentConfig &config) {
  OptimizerConfig opt;
  opt.algorithm = *config.optimizer.algorithm;
  opt.family = config.loss.family;
  opt.mu = config.loss.mu;
  opt.r_star = config.loss.r_star;
  opt.batch_size = config.optimizer.batch_size;
  opt.learning_rate = config.optimizer.learning_rate;
  opt.learning_rate_final = config.optimizer.learning_rate_final;
  opt.beta1 = config.optimizer.beta1;
  opt.beta2 = config.optimizer.beta2;
  opt.adam_epsilon = config.optimizer.adam_epsilon;
  opt.max_iterations = config.optimizer.max_iterations;
  opt.target_loss = config.optimizer.target_loss;
  opt.seed = config.run.seed;
  opt.update_rule = config.optimizer.update_rule;
  opt.detail_stride = config.optimizer.detail_stride;
  opt.amplitude_clip = config.control.amplitude_clip;
  opt.checkpoint_stride = config.optimizer.checkpoint_stride;
  validate(opt);
  return opt;
}

UtilitySpec build_utility(const ExperimentConfig &config) {
  UtilitySpec utility;
  utility.family = config.loss.family;
  utility.mu = config.loss.mu ? *config.loss.mu
               : config.loss.family == UtilityFamily::Exponential ? 0.0
                                                                  : 1.0;
  return utility;
}

SampleStream train_stream(const ExperimentConfig &config) {
  return SampleStream{config.uncertainty, config.run.seed,
                      StreamPurpose::Train};
}

SampleStream eval_stream(const ExperimentConfig &config, std::uint64_t salt) {
  return SampleStream{config.uncertainty,
                      rng::combine(rng::splitmix64(config.run.seed), salt),
                      StreamPurpose::Eval};
}

}  // namespace rsgrape
