// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Experiment configuration (flat JSON), the preset catalog and the
// train/infer drivers that own a run directory.

#pragma once

#include "hypnqs/ansatz.hpp"
#include "hypnqs/checkpoint.hpp"
#include "hypnqs/errors.hpp"
#include "hypnqs/hamiltonian.hpp"
#include "hypnqs/metrics.hpp"
#include "hypnqs/vmc.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hypnqs {

struct ExperimentConfig {
  std::string name = "run";

  ModelKind model = ModelKind::TFIM1D;
  int n = 0;
  int nx = 0;  // lattice rows (tfim2d)
  int ny = 0;  // lattice columns (tfim2d)
  double J = 1.0;
  double B = 1.0;
  double J1 = 1.0;
  double J2 = 0.0;
  double J3 = 0.0;

  CellKind cell = CellKind::EGru;
  int d_h = 50;
  bool complex = false;
  bool marshall_sign = false;
  double curvature = 1.0;
  double ball_eps = 1e-5;
  // Checked against count_parameters when > 0.
  std::int64_t expected_parameters = 0;

  int epochs = 120;
  int batch_size = 50;
  std::uint64_t seed = 1;
  AdamOptions adam;
  double rsgd_lr = 1e-2;
  ClipMode clip = ClipMode::None;
  double clip_value = 1.0;
  double variance_tolerance = 1.0;

  int inference_samples = 10000;
  std::string output_dir = "runs";
  int threads = 1;  // 0 = all hardware threads
  std::optional<double> reference_energy;

  // Model-dependent defaults: Heisenberg models get the complex
  // Marshall-signed ansatz, norm clipping at 1 and a looser variance gate.
  static ExperimentConfig defaults(ModelKind m) {
    ExperimentConfig c;
    c.model = m;
    if (is_heisenberg(m)) {
      c.complex = true;
      c.marshall_sign = true;
      c.clip = ClipMode::Norm;
      c.clip_value = 1.0;
      c.variance_tolerance = 10.0;
    }
    return c;
  }

  int sites() const { return model == ModelKind::TFIM2D ? nx * ny : n; }

  HamiltonianSpec spec() const {
    switch (model) {
      case ModelKind::TFIM1D: return HamiltonianSpec::tfim1d(n, J, B);
      case ModelKind::TFIM2D: return HamiltonianSpec::tfim2d(nx, ny, J, B);
      case ModelKind::J1J2: return HamiltonianSpec::j1j2(n, J1, J2);
      case ModelKind::J1J2J3: return HamiltonianSpec::j1j2j3(n, J1, J2, J3);
    }
    throw ConfigError("config: unknown model");
  }

  AnsatzConfig ansatz() const {
    AnsatzConfig a;
    a.cell = cell;
    a.d_h = d_h;
    a.complex_output = complex;
    a.marshall_sign = marshall_sign;
    a.c = curvature;
    a.ball_eps = ball_eps;
    a.n = sites();
    if (cell == CellKind::ERnn2D) {
      a.rows = nx;
      a.cols = ny;
    }
    return a;
  }

  TrainOptions train_options() const {
    TrainOptions t;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.seed = seed;
    t.adam = adam;
    t.rsgd_lr = rsgd_lr;
    t.clip = clip;
    t.clip_value = clip_value;
    t.variance_tolerance = variance_tolerance;
    t.threads = static_cast<unsigned>(threads);
    return t;
  }

  void validate() const {
    if (name.empty() || name == "." || name == "..") throw ConfigError("config: name must be a non-empty identifier");
    for (char ch : name) {
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) {
        throw ConfigError("config: name may only contain letters, digits, '_', '-' and '.'");
      }
    }
    if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");
    if (threads < 0) throw ConfigError("config: threads must be >= 0");
    if (inference_samples < 1) throw ConfigError("config: inference_samples must be >= 1");
    if (cell == CellKind::ERnn2D && model != ModelKind::TFIM2D) {
      throw ConfigError("config: cell 2drnn requires model tfim2d");
    }
    if (reference_energy && !std::isfinite(*reference_energy)) throw ConfigError("config: reference_energy must be finite");
    try {
      spec().validate();
      ansatz().validate();
      train_options().validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (expected_parameters < 0) throw ConfigError("config: expected_parameters must be >= 0");
    if (expected_parameters > 0 && count_parameters(ansatz()) != expected_parameters) {
      throw ConfigError("config: ansatz has " + std::to_string(count_parameters(ansatz())) +
                        " parameters, expected_parameters says " + std::to_string(expected_parameters));
    }
  }
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

using json = nlohmann::json;

inline double json_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("config: '" + key + "' must be finite");
  return x;
}

inline std::int64_t json_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

inline int json_int32(const json& v, const std::string& key) {
  const std::int64_t x = json_int(v, key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError("config: '" + key + "' is out of range");
  }
  return static_cast<int>(x);
}

inline bool json_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config: '" + key + "' must be true or false");
  return v.get<bool>();
}

inline std::string json_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

enum class KeyScope { Any, Tfim, Tfim2d, Heisenberg, J1J2J3 };

inline bool scope_applies(KeyScope s, ModelKind m) {
  switch (s) {
    case KeyScope::Any: return true;
    case KeyScope::Tfim: return !is_heisenberg(m);
    case KeyScope::Tfim2d: return m == ModelKind::TFIM2D;
    case KeyScope::Heisenberg: return is_heisenberg(m);
    case KeyScope::J1J2J3: return m == ModelKind::J1J2J3;
  }
  return false;
}

struct KeyRule {
  KeyScope scope;
  std::function<void(ExperimentConfig&, const json&, const std::string&)> set;
};

inline const std::map<std::string, KeyRule>& key_rules() {
  using C = ExperimentConfig;
  static const std::map<std::string, KeyRule> rules{
      {"name", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.name = json_string(v, k); }}},
      {"model", {KeyScope::Any, [](C&, const json&, const std::string&) {}}},
      {"n", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.n = json_int32(v, k); }}},
      {"nx", {KeyScope::Tfim2d, [](C& c, const json& v, const std::string& k) { c.nx = json_int32(v, k); }}},
      {"ny", {KeyScope::Tfim2d, [](C& c, const json& v, const std::string& k) { c.ny = json_int32(v, k); }}},
      {"J", {KeyScope::Tfim, [](C& c, const json& v, const std::string& k) { c.J = json_number(v, k); }}},
      {"B", {KeyScope::Tfim, [](C& c, const json& v, const std::string& k) { c.B = json_number(v, k); }}},
      {"J1", {KeyScope::Heisenberg, [](C& c, const json& v, const std::string& k) { c.J1 = json_number(v, k); }}},
      {"J2", {KeyScope::Heisenberg, [](C& c, const json& v, const std::string& k) { c.J2 = json_number(v, k); }}},
      {"J3", {KeyScope::J1J2J3, [](C& c, const json& v, const std::string& k) { c.J3 = json_number(v, k); }}},
      {"cell",
       {KeyScope::Any,
        [](C& c, const json& v, const std::string& k) {
          try {
            c.cell = parse_cell_kind(json_string(v, k));
          } catch (const ConfigError&) {
            throw;
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
          }
        }}},
      {"d_h", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.d_h = json_int32(v, k); }}},
      {"complex", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.complex = json_bool(v, k); }}},
      {"marshall_sign",
       {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.marshall_sign = json_bool(v, k); }}},
      {"curvature", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.curvature = json_number(v, k); }}},
      {"ball_eps", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.ball_eps = json_number(v, k); }}},
      {"expected_parameters",
       {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.expected_parameters = json_int(v, k); }}},
      {"epochs", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.epochs = json_int32(v, k); }}},
      {"batch_size", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.batch_size = json_int32(v, k); }}},
      {"seed",
       {KeyScope::Any,
        [](C& c, const json& v, const std::string& k) {
          const std::int64_t s = json_int(v, k);
          if (s < 0) throw ConfigError("config: 'seed' must be >= 0");
          c.seed = static_cast<std::uint64_t>(s);
        }}},
      {"lr", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.adam.lr = json_number(v, k); }}},
      {"beta1", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.adam.beta1 = json_number(v, k); }}},
      {"beta2", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.adam.beta2 = json_number(v, k); }}},
      {"adam_eps", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.adam.eps = json_number(v, k); }}},
      {"lr_decay", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.adam.decay = json_number(v, k); }}},
      {"lr_decay_steps",
       {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.adam.decay_steps = json_number(v, k); }}},
      {"rsgd_lr", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.rsgd_lr = json_number(v, k); }}},
      {"clip",
       {KeyScope::Any,
        [](C& c, const json& v, const std::string& k) {
          try {
            c.clip = parse_clip_mode(json_string(v, k));
          } catch (const ConfigError&) {
            throw;
          } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
          }
        }}},
      {"clip_value", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.clip_value = json_number(v, k); }}},
      {"variance_tolerance",
       {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.variance_tolerance = json_number(v, k); }}},
      {"inference_samples",
       {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.inference_samples = json_int32(v, k); }}},
      {"output_dir", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.output_dir = json_string(v, k); }}},
      {"threads", {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.threads = json_int32(v, k); }}},
      {"reference_energy",
       {KeyScope::Any, [](C& c, const json& v, const std::string& k) { c.reference_energy = json_number(v, k); }}},
  };
  return rules;
}

}  // namespace detail

// Unknown keys, keys that do not apply to the model and mistyped values are
// rejected. The result is fully validated.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  if (!j.contains("model")) throw ConfigError("config: missing required key 'model'");
  ModelKind model{};
  try {
    model = parse_model_kind(detail::json_string(j.at("model"), "model"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c = ExperimentConfig::defaults(model);
  const auto& rules = detail::key_rules();
  for (const auto& [key, value] : j.items()) {
    const auto it = rules.find(key);
    if (it == rules.end()) throw ConfigError("config: unknown key '" + key + "'");
    if (!detail::scope_applies(it->second.scope, model)) {
      throw ConfigError("config: key '" + key + "' does not apply to model " + std::string(model_name(model)));
    }
    it->second.set(c, value, key);
  }
  if (model == ModelKind::TFIM2D) {
    if (!j.contains("nx") || !j.contains("ny")) throw ConfigError("config: tfim2d needs 'nx' and 'ny'");
    if (j.contains("n") && c.n != c.nx * c.ny) throw ConfigError("config: 'n' must equal nx * ny");
    c.n = c.nx * c.ny;
  } else if (!j.contains("n")) {
    throw ConfigError("config: missing required key 'n'");
  }
  c.validate();
  return c;
}

// Comments (// and /* */) are allowed.
inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["model"] = std::string(model_name(c.model));
  if (c.model == ModelKind::TFIM2D) {
    j["nx"] = c.nx;
    j["ny"] = c.ny;
  } else {
    j["n"] = c.n;
  }
  if (is_heisenberg(c.model)) {
    j["J1"] = c.J1;
    j["J2"] = c.J2;
    if (c.model == ModelKind::J1J2J3) j["J3"] = c.J3;
  } else {
    j["J"] = c.J;
    j["B"] = c.B;
  }
  j["cell"] = std::string(cell_name(c.cell));
  j["d_h"] = c.d_h;
  j["complex"] = c.complex;
  j["marshall_sign"] = c.marshall_sign;
  j["curvature"] = c.curvature;
  j["ball_eps"] = c.ball_eps;
  if (c.expected_parameters > 0) j["expected_parameters"] = c.expected_parameters;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["lr"] = c.adam.lr;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["adam_eps"] = c.adam.eps;
  j["lr_decay"] = c.adam.decay;
  j["lr_decay_steps"] = c.adam.decay_steps;
  j["rsgd_lr"] = c.rsgd_lr;
  j["clip"] = std::string(clip_name(c.clip));
  j["clip_value"] = c.clip_value;
  j["variance_tolerance"] = c.variance_tolerance;
  j["inference_samples"] = c.inference_samples;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  if (c.reference_energy) j["reference_energy"] = *c.reference_energy;
  return j;
}

// ---------------------------------------------------------------------------
// Preset catalog

struct Preset {
  std::string name;
  std::string experiment;  // short description of the experiment family
  ExperimentConfig config;
  bool desk_scale = false;
};

namespace detail {

inline std::string fixed1(double x) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << x;
  return os.str();
}

struct PresetAnsatz {
  CellKind cell;
  int d_h;
  std::int64_t parameters;  // published parameter count
  int epochs;
};

inline Preset make_preset(std::string name, std::string experiment, ExperimentConfig c, const PresetAnsatz& a,
                          double reference) {
  c.name = name;
  c.cell = a.cell;
  c.d_h = a.d_h;
  c.expected_parameters = a.parameters;
  c.epochs = a.epochs;
  c.reference_energy = reference;
  const bool desk = c.sites() <= 25;
  return {std::move(name), std::move(experiment), std::move(c), desk};
}

inline std::vector<Preset> build_catalog() {
  std::vector<Preset> out;
  constexpr auto ernn = CellKind::ERnn;
  constexpr auto egru = CellKind::EGru;
  constexpr auto hgru = CellKind::HGru;
  constexpr auto rnn2d = CellKind::ERnn2D;

  // 1D TFIM, J = B = 1, real ansatzes with d_h = 50.
  const std::vector<std::pair<int, double>> tfim1d{{20, -25.1078}, {40, -50.5694}, {80, -101.4974}, {100, -126.9619}};
  for (const auto& [n, e0] : tfim1d) {
    ExperimentConfig c = ExperimentConfig::defaults(ModelKind::TFIM1D);
    c.n = n;
    c.adam.lr = 1e-2;
    c.variance_tolerance = 0.05;
    const std::string base = "tfim1d_n" + std::to_string(n) + "_";
    out.push_back(make_preset(base + "ernn", "tfim1d", c, {ernn, 50, 2752, 120}, e0));
    out.push_back(make_preset(base + "egru", "tfim1d", c, {egru, 50, 8052, 120}, e0));
    out.push_back(make_preset(base + "hgru", "tfim1d", c, {hgru, 50, 8052, 120}, e0));
  }

  // 2D TFIM, J = 1, B = 3, real ansatzes with d_h = 50.
  struct Lattice {
    int side;
    double e0;
    int epochs_1d;
    int epochs_2d;
  };
  for (const Lattice& l : {Lattice{5, -78.6857, 450, 200}, Lattice{7, -154.8463, 450, 300},
                           Lattice{8, -202.5077, 350, 350}, Lattice{9, -256.5535, 350, 350}}) {
    ExperimentConfig c = ExperimentConfig::defaults(ModelKind::TFIM2D);
    c.nx = c.ny = l.side;
    c.n = l.side * l.side;
    c.B = 3.0;
    c.adam.lr = 1e-2;
    const std::string base = "tfim2d_" + std::to_string(l.side) + "x" + std::to_string(l.side) + "_";
    out.push_back(make_preset(base + "egru", "tfim2d", c, {egru, 50, 8052, l.epochs_1d}, l.e0));
    out.push_back(make_preset(base + "hgru", "tfim2d", c, {hgru, 50, 8052, l.epochs_1d}, l.e0));
    out.push_back(make_preset(base + "2drnn", "tfim2d", c, {rnn2d, 50, 5352, l.epochs_2d}, l.e0));
  }

  // J1-J2 chain, N = 50: eGRU-75 at every J2 and the best hGRU width.
  struct J1J2Point {
    double j2;
    double e0;
    int hgru_d_h;
    std::int64_t hgru_parameters;
  };
  for (const J1J2Point& p : {J1J2Point{0.0, -21.9721, 60, 11584}, J1J2Point{0.2, -20.3150, 75, 17854},
                             J1J2Point{0.5, -18.7500, 70, 15614}, J1J2Point{0.8, -20.9842, 75, 17854}}) {
    ExperimentConfig c = ExperimentConfig::defaults(ModelKind::J1J2);
    c.n = 50;
    c.J2 = p.j2;
    const std::string j2 = "_j2_" + fixed1(p.j2);
    out.push_back(make_preset("j1j2_n50_egru75" + j2, "j1j2", c, {egru, 75, 17854, 450}, p.e0));
    // Widths that occur at a single J2 keep the short name.
    const bool unique = p.hgru_d_h != 75;
    out.push_back(make_preset("j1j2_n50_hgru" + std::to_string(p.hgru_d_h) + (unique ? "" : j2), "j1j2", c,
                              {hgru, p.hgru_d_h, p.hgru_parameters, 450}, p.e0));
  }

  // J1-J2-J3 chain, N = 30, first set: eGRU-50 and hGRU-50.
  struct J3Point {
    double j2;
    double j3;
    double e0;
  };
  for (const J3Point& p : {J3Point{0.0, 0.5, -15.8903}, J3Point{0.2, 0.2, -12.9430}, J3Point{0.2, 0.5, -14.6408},
                           J3Point{0.5, 0.2, -11.5287}}) {
    ExperimentConfig c = ExperimentConfig::defaults(ModelKind::J1J2J3);
    c.n = 30;
    c.J2 = p.j2;
    c.J3 = p.j3;
    const std::string base = "j1j2j3_set1_" + fixed1(p.j2) + "_" + fixed1(p.j3) + "_";
    out.push_back(make_preset(base + "egru50", "j1j2j3_set1", c, {egru, 50, 8154, 280}, p.e0));
    out.push_back(make_preset(base + "hgru50", "j1j2j3_set1", c, {hgru, 50, 8154, 280}, p.e0));
  }

  // Second set: wider eGRU-60 against narrower hGRU variants.
  struct Set2Point {
    double j2;
    double j3;
    double e0;
    int hgru_d_h;
    std::int64_t hgru_parameters;
    int epochs;
  };
  for (const Set2Point& p : {Set2Point{0.2, 0.5, -14.6408, 55, 9794, 450}, Set2Point{0.5, 0.2, -11.5287, 57, 10492, 500}}) {
    ExperimentConfig c = ExperimentConfig::defaults(ModelKind::J1J2J3);
    c.n = 30;
    c.J2 = p.j2;
    c.J3 = p.j3;
    const std::string base = "j1j2j3_set2_" + fixed1(p.j2) + "_" + fixed1(p.j3) + "_";
    out.push_back(make_preset(base + "egru60", "j1j2j3_set2", c, {egru, 60, 11584, p.epochs}, p.e0));
    out.push_back(make_preset(base + "hgru" + std::to_string(p.hgru_d_h), "j1j2j3_set2", c,
                              {hgru, p.hgru_d_h, p.hgru_parameters, p.epochs}, p.e0));
  }
  return out;
}

}  // namespace detail

inline const std::vector<Preset>& preset_catalog() {
  static const std::vector<Preset> catalog = detail::build_catalog();
  return catalog;
}

inline const Preset& find_preset(std::string_view name) {
  for (const Preset& p : preset_catalog()) {
    if (p.name == name) return p;
  }
  throw ConfigError("preset: unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Run directories

inline constexpr std::string_view kOutputRootEnv = "HYPNQS_OUTPUT_ROOT";
inline constexpr std::string_view kMetricsFile = "metrics.csv";
inline constexpr std::string_view kConfigFile = "config.json";

inline std::filesystem::path output_root(const ExperimentConfig& c) {
  if (const char* env = std::getenv(std::string(kOutputRootEnv).c_str()); env != nullptr && *env != '\0') {
    return env;
  }
  return c.output_dir;
}

inline std::filesystem::path run_directory(const ExperimentConfig& c) { return output_root(c) / c.name; }

struct RunSummary {
  std::filesystem::path run_dir;
  TrainResult result;
  int saved_epoch = 0;
  bool selected_best = false;  // false when no epoch passed the gate
  double elapsed_s = 0.0;
};

inline Checkpoint make_checkpoint(const ExperimentConfig& c, const ParameterStore& params, int epoch, bool best) {
  Checkpoint ck;
  ck.ansatz = c.ansatz();
  ck.params = params;
  ck.seed = c.seed;
  ck.epoch = epoch;
  ck.extra = {{"name", c.name}, {"model", std::string(model_name(c.model))}, {"selected", best ? "best" : "last"}};
  return ck;
}

// Trains and writes <run>/metrics.csv, <run>/best.ckpt, <run>/manifest and
// <run>/config.json. Nothing is written when the config is invalid.
inline RunSummary run_training(const ExperimentConfig& c,
                               const std::function<void(const TrainingRecord&)>& progress = {}) {
  c.validate();
  RunSummary summary;
  summary.run_dir = run_directory(c);
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(summary.run_dir);
  {
    std::ofstream cfg_out(summary.run_dir / kConfigFile, std::ios::trunc);
    cfg_out << config_to_json(c).dump(2) << '\n';
  }
  MetricsWriter metrics(summary.run_dir / kMetricsFile);
  ParameterStore params = ParameterStore::for_config(c.ansatz());
  params.glorot_init(c.seed);
  const auto on_epoch = [&](const TrainingRecord& rec, const ParameterStore& measured) {
    metrics.write(rec);
    if (rec.best_saved) {
      save_run_checkpoint(summary.run_dir, make_checkpoint(c, measured, rec.epoch, true));
      summary.saved_epoch = rec.epoch;
    }
    if (progress) progress(rec);
  };
  summary.result = train(c.ansatz(), c.spec(), c.train_options(), std::move(params), on_epoch);
  summary.selected_best = summary.result.best_epoch > 0;
  if (!summary.selected_best) {
    save_run_checkpoint(summary.run_dir, make_checkpoint(c, summary.result.last, c.epochs, false));
    summary.saved_epoch = c.epochs;
  }
  summary.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

// Loads <run>/manifest + best.ckpt and checks the ansatz against the config.
inline Checkpoint load_run_for_config(const ExperimentConfig& c, const std::filesystem::path& run_dir) {
  Checkpoint ck = load_run_checkpoint(run_dir);
  const AnsatzConfig want = c.ansatz();
  const AnsatzConfig& got = ck.ansatz;
  if (got.cell != want.cell || got.d_h != want.d_h || got.d_v != want.d_v || got.n != want.n ||
      got.rows != want.rows || got.cols != want.cols || got.complex_output != want.complex_output ||
      got.marshall_sign != want.marshall_sign || got.c != want.c || got.ball_eps != want.ball_eps) {
    throw CheckpointError("checkpoint in " + run_dir.string() + " does not match the configured ansatz");
  }
  return ck;
}

inline InferenceResult run_inference(const ExperimentConfig& c, const ParameterStore& params,
                                     std::optional<int> samples = std::nullopt) {
  c.validate();
  const int n = samples.value_or(c.inference_samples);
  if (n < 1) throw ConfigError("infer: sample count must be >= 1");
  return infer(c.ansatz(), params, c.spec(), static_cast<std::size_t>(n), c.seed, static_cast<unsigned>(c.threads));
}

}  // namespace hypnqs
