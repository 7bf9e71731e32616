// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Per-epoch metrics CSV shared with the plotting scripts.

#pragma once

#include "hypnqs/vmc.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypnqs {

inline constexpr std::string_view kMetricsHeader = "epoch,mean_e,imag_e,variance,stderr,best_saved,elapsed_s";

struct MetricsRow {
  int epoch = 0;
  double mean_e = 0.0;
  double imag_e = 0.0;
  double variance = 0.0;
  double stderr_ = 0.0;
  bool best_saved = false;
  double elapsed_s = 0.0;
};

inline MetricsRow metrics_row(const TrainingRecord& r) {
  return {r.epoch, r.mean.real(), r.mean.imag(), r.variance, r.stderr_, r.best_saved, r.elapsed_s};
}

inline std::string format_metrics_row(const MetricsRow& r) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << r.epoch << ',' << r.mean_e << ',' << r.imag_e << ',' << r.variance << ',' << r.stderr_ << ','
     << (r.best_saved ? 1 : 0) << ',';
  os << std::setprecision(6) << std::fixed << r.elapsed_s;
  return os.str();
}

// Appends one flushed line per epoch so a crashed run keeps its history.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
    out_ << kMetricsHeader << '\n';
    out_.flush();
  }

  void write(const MetricsRow& row) {
    out_ << format_metrics_row(row) << '\n';
    out_.flush();
  }

  void write(const TrainingRecord& r) { write(metrics_row(r)); }

 private:
  std::ofstream out_;
};

inline std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw std::runtime_error("metrics file " + path.string() + " has an unexpected header");
  }
  std::vector<MetricsRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::runtime_error("metrics line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      MetricsRow r;
      r.epoch = std::stoi(f[0]);
      r.mean_e = std::stod(f[1]);
      r.imag_e = std::stod(f[2]);
      r.variance = std::stod(f[3]);
      r.stderr_ = std::stod(f[4]);
      if (f[5] != "0" && f[5] != "1") throw std::invalid_argument("best_saved");
      r.best_saved = f[5] == "1";
      r.elapsed_s = std::stod(f[6]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw std::runtime_error("metrics line " + std::to_string(line_no) + ": malformed value");
    }
  }
  return rows;
}

}  // namespace hypnqs
