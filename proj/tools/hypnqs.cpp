// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// hypnqs command-line driver.
//
// Exit codes: 0 success, 1 validation (config, flags, checkpoint, I/O),
// 2 numerical failure. Errors are printed to stderr as one JSON line.

#include "hypnqs/hypnqs.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using hypnqs::ExperimentConfig;
using ojson = nlohmann::ordered_json;

enum ExitCode { kOk = 0, kValidation = 1, kNumerical = 2 };

int report_error(std::string_view kind, std::string_view message, int code) {
  ojson e;
  e["error"] = kind;
  e["message"] = message;
  std::cerr << e.dump() << std::endl;
  return code;
}

void emit(const ojson& record) { std::cout << record.dump() << std::endl; }

struct Source {
  std::string config_path;
  std::string preset;
  int threads = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("config", config_path, "Experiment config (flat JSON)");
    cmd->add_option("--preset", preset, "Use a catalog preset instead of a config file");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores); does not change results")
        ->check(CLI::NonNegativeNumber);
  }

  ExperimentConfig load() const {
    if (config_path.empty() == preset.empty()) {
      throw hypnqs::ConfigError("cli: give exactly one of a config path or --preset");
    }
    ExperimentConfig c = preset.empty() ? hypnqs::load_config(config_path) : hypnqs::find_preset(preset).config;
    if (threads >= 0) c.threads = threads;
    c.validate();
    return c;
  }
};

ojson spec_record(const ExperimentConfig& c) {
  ojson j;
  j["model"] = std::string(hypnqs::model_name(c.model));
  j["n"] = c.sites();
  if (c.model == hypnqs::ModelKind::TFIM2D) {
    j["nx"] = c.nx;
    j["ny"] = c.ny;
  }
  if (hypnqs::is_heisenberg(c.model)) {
    j["J1"] = c.J1;
    j["J2"] = c.J2;
    if (c.model == hypnqs::ModelKind::J1J2J3) j["J3"] = c.J3;
  } else {
    j["J"] = c.J;
    j["B"] = c.B;
  }
  return j;
}

int cmd_train(const Source& src, bool quiet) {
  const ExperimentConfig c = src.load();
  const auto progress = [&](const hypnqs::TrainingRecord& r) {
    if (quiet) return;
    std::fprintf(stderr, "epoch %4d  mean %.6f  imag %+.2e  var %.4e  %s\n", r.epoch, r.mean.real(), r.mean.imag(),
                 r.variance, r.best_saved ? "saved" : "");
  };
  const auto s = hypnqs::run_training(c, progress);
  ojson rec;
  rec["record"] = "train";
  rec["name"] = c.name;
  rec["run_dir"] = s.run_dir.string();
  rec["epochs"] = c.epochs;
  rec["selected"] = s.selected_best ? "best" : "last";
  rec["saved_epoch"] = s.saved_epoch;
  if (s.selected_best) rec["best_mean"] = s.result.best_mean;
  rec["last_mean"] = s.result.history.back().mean.real();
  rec["elapsed_s"] = s.elapsed_s;
  emit(rec);
  return kOk;
}

int cmd_infer(const Source& src, const std::string& run_dir, std::optional<int> samples) {
  const ExperimentConfig c = src.load();
  const std::filesystem::path dir = run_dir.empty() ? hypnqs::run_directory(c) : std::filesystem::path(run_dir);
  const auto ck = hypnqs::load_run_for_config(c, dir);
  const auto r = hypnqs::run_inference(c, ck.params, samples);
  ojson rec;
  rec["record"] = "infer";
  rec["name"] = c.name;
  rec["run_dir"] = dir.string();
  rec["checkpoint_epoch"] = ck.epoch;
  rec["samples"] = r.samples;
  rec["mean"] = r.stats.mean.real();
  rec["imag"] = r.stats.mean.imag();
  rec["variance"] = r.stats.variance;
  rec["stderr"] = r.stats.stderr_;
  rec["formatted"] = hypnqs::format_energy(r.stats.mean.real(), r.stats.stderr_);
  if (c.reference_energy) {
    rec["reference_energy"] = *c.reference_energy;
    rec["relative_error"] = std::abs((r.stats.mean.real() - *c.reference_energy) / *c.reference_energy);
  }
  emit(rec);
  return kOk;
}

int cmd_exact(const Source& src, const std::string& method_name) {
  const ExperimentConfig c = src.load();
  hypnqs::ExactMethod method = hypnqs::ExactMethod::Auto;
  if (method_name == "dense") {
    method = hypnqs::ExactMethod::Dense;
  } else if (method_name == "lanczos") {
    method = hypnqs::ExactMethod::Lanczos;
  }
  hypnqs::LanczosOptions opt;
  opt.threads = static_cast<unsigned>(c.threads);
  hypnqs::GroundState gs;
  try {
    gs = hypnqs::ground_energy(c.spec(), method, opt);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw hypnqs::NumericalError(e.what());
  }
  ojson rec;
  rec["record"] = "exact";
  rec.update(spec_record(c));
  rec["method"] = gs.method == hypnqs::ExactMethod::Dense ? "dense" : "lanczos";
  rec["basis_size"] = gs.basis_size;
  rec["e0"] = gs.energy;
  emit(rec);
  return kOk;
}

int cmd_geometry(const hypnqs::geo::GeometryCheckOptions& opt) {
  const auto results = hypnqs::geo::run_geometry_checks(opt);
  for (const auto& r : results) {
    ojson rec;
    rec["record"] = "geometry";
    rec["property"] = r.name;
    rec["trials"] = r.trials;
    rec["worst"] = r.worst;
    rec["tolerance"] = r.tolerance;
    rec["pass"] = r.passed;
    emit(rec);
  }
  return hypnqs::geo::all_passed(results) ? kOk : kNumerical;
}

int cmd_enumerate(const Source& src, const std::string& run_dir, bool init) {
  const ExperimentConfig c = src.load();
  if (c.sites() > hypnqs::kEnumerateMaxSites) {
    throw hypnqs::ConfigError("enumerate: at most " + std::to_string(hypnqs::kEnumerateMaxSites) + " sites");
  }
  hypnqs::ParameterStore params;
  if (init) {
    params = hypnqs::ParameterStore::for_config(c.ansatz());
    params.glorot_init(c.seed);
  } else {
    const std::filesystem::path dir = run_dir.empty() ? hypnqs::run_directory(c) : std::filesystem::path(run_dir);
    params = hypnqs::load_run_for_config(c, dir).params;
  }
  const hypnqs::Network net(c.ansatz(), params);
  const auto table = hypnqs::enumerate_probabilities(net);
  std::printf("index,spins,probability,phase\n");
  for (std::size_t i = 0; i < static_cast<std::size_t>(table.prob.size()); ++i) {
    const auto s = hypnqs::config_from_index(i, c.sites());
    std::string bits;
    for (auto v : s) bits.push_back(v ? '1' : '0');
    std::printf("%zu,%s,%.17g,%.17g\n", i, bits.c_str(), table.prob[static_cast<Eigen::Index>(i)],
                table.phase[static_cast<Eigen::Index>(i)]);
  }
  return kOk;
}

int cmd_presets(const std::string& show, const std::string& write_dir) {
  if (!show.empty()) {
    std::cout << hypnqs::config_to_json(hypnqs::find_preset(show).config).dump(2) << std::endl;
    return kOk;
  }
  if (!write_dir.empty()) std::filesystem::create_directories(write_dir);
  for (const auto& p : hypnqs::preset_catalog()) {
    p.config.validate();
    if (!write_dir.empty()) {
      std::ofstream out(std::filesystem::path(write_dir) / (p.name + ".json"), std::ios::trunc);
      out << hypnqs::config_to_json(p.config).dump(2) << '\n';
    }
    std::printf("%-34s %-12s %-7s n=%-4d %-6s d_h=%-3d params=%-6lld epochs=%-4d %-14s ref=%.4f\n", p.name.c_str(),
                p.experiment.c_str(), std::string(hypnqs::model_name(p.config.model)).c_str(), p.config.sites(),
                std::string(hypnqs::cell_name(p.config.cell)).c_str(), p.config.d_h,
                static_cast<long long>(p.config.expected_parameters), p.config.epochs,
                p.desk_scale ? "desk-scale" : "long-running", p.config.reference_energy.value_or(0.0));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic and Euclidean RNN wavefunctions for quantum spin models"};
  app.require_subcommand(1);

  Source train_src, infer_src, exact_src, enum_src;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train an ansatz; writes metrics.csv, manifest and best.ckpt");
  train_src.attach(train);
  train->add_flag("-q,--quiet", quiet, "Suppress per-epoch progress on stderr");

  std::string infer_run;
  std::optional<int> infer_samples;
  auto* infer = app.add_subcommand("infer", "Sample a trained checkpoint and report mean (stderr)");
  infer_src.attach(infer);
  infer->add_option("--run", infer_run, "Run directory (default <output root>/<name>)");
  infer->add_option("--samples", infer_samples, "Override inference_samples")->check(CLI::PositiveNumber);

  std::string method = "auto";
  auto* exact = app.add_subcommand("exact", "Exact ground-state energy of the configured Hamiltonian");
  exact_src.attach(exact);
  exact->add_option("--method", method, "auto, dense or lanczos")->check(CLI::IsMember({"auto", "dense", "lanczos"}));

  hypnqs::geo::GeometryCheckOptions geo_opt;
  auto* geometry = app.add_subcommand("geometry-check", "Randomized gyrovector property suite");
  geometry->add_option("--trials", geo_opt.trials, "Random draws per property")->check(CLI::PositiveNumber);
  geometry->add_option("--seed", geo_opt.seed, "Generator seed");
  geometry->add_option("--dim", geo_opt.dim, "Ball dimension")->check(CLI::PositiveNumber);
  geometry->add_option("--curvature", geo_opt.curvature, "Curvature c > 0")->check(CLI::PositiveNumber);

  std::string enum_run;
  bool enum_init = false;
  auto* enumerate = app.add_subcommand("enumerate", "Print P(s) and phase(s) for every configuration (N <= 10)");
  enum_src.attach(enumerate);
  enumerate->add_option("--run", enum_run, "Run directory (default <output root>/<name>)");
  enumerate->add_flag("--init", enum_init, "Use freshly initialized parameters instead of a checkpoint");

  std::string show;
  std::string write_dir;
  auto* presets = app.add_subcommand("presets", "List, show or write the preset catalog");
  presets->add_option("--show", show, "Print one preset as a config file");
  presets->add_option("--write", write_dir, "Write every preset config into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), kValidation);
  }

  try {
    if (*train) return cmd_train(train_src, quiet);
    if (*infer) return cmd_infer(infer_src, infer_run, infer_samples);
    if (*exact) return cmd_exact(exact_src, method);
    if (*geometry) return cmd_geometry(geo_opt);
    if (*enumerate) return cmd_enumerate(enum_src, enum_run, enum_init);
    if (*presets) return cmd_presets(show, write_dir);
  } catch (const hypnqs::NumericalError& e) {
    return report_error("numerical", e.what(), kNumerical);
  } catch (const hypnqs::CheckpointError& e) {
    return report_error("checkpoint", e.what(), kValidation);
  } catch (const std::invalid_argument& e) {
    return report_error("validation", e.what(), kValidation);
  } catch (const std::domain_error& e) {
    return report_error("numerical", e.what(), kNumerical);
  } catch (const std::exception& e) {
    return report_error("io", e.what(), kValidation);
  }
  return kValidation;
}
