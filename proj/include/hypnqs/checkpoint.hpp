// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.
//
// Checkpoints: a key-value text manifest plus a blob of little-endian
// float64 values in manifest tensor order.

#pragma once

#include "hypnqs/ansatz.hpp"
#include "hypnqs/errors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace hypnqs {

inline constexpr std::string_view kManifestFormat = "hypnqs-checkpoint";
inline constexpr int kManifestVersion = 1;

struct Checkpoint {
  AnsatzConfig ansatz;
  ParameterStore params;
  std::uint64_t seed = 0;
  int epoch = 0;
  // Free-form key-value pairs carried through save/load (run name, model...).
  std::vector<std::pair<std::string, std::string>> extra;

  std::string extra_value(std::string_view key, std::string fallback = {}) const {
    for (const auto& [k, v] : extra) {
      if (k == key) return v;
    }
    return fallback;
  }
};

namespace detail {

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline void store_le(std::uint64_t bits, char* out) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
}

inline std::uint64_t load_le(const char* in) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return bits;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      value = static_cast<T>(std::stod(text, &used));
      if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw CheckpointError("manifest: bad number for '" + key + "': " + text);
    }
  } else {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw CheckpointError("manifest: bad integer for '" + key + "': " + text);
    }
  }
  return value;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw CheckpointError("manifest: bad boolean for '" + key + "': " + text);
}

// Writes to a sibling temporary and renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace detail

inline std::string encode_blob(const Vec& values) {
  std::string bytes(static_cast<std::size_t>(values.size()) * 8, '\0');
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    detail::store_le(std::bit_cast<std::uint64_t>(values[i]), bytes.data() + 8 * i);
  }
  return bytes;
}

inline Vec decode_blob(std::string_view bytes) {
  if (bytes.size() % 8 != 0) throw CheckpointError("blob size is not a multiple of 8 bytes");
  Vec out(static_cast<Eigen::Index>(bytes.size() / 8));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = std::bit_cast<double>(detail::load_le(bytes.data() + 8 * i));
  return out;
}

inline std::string write_manifest(const Checkpoint& ck) {
  const AnsatzConfig& a = ck.ansatz;
  std::ostringstream os;
  os << "format = " << kManifestFormat << '\n';
  os << "version = " << kManifestVersion << '\n';
  os << "cell = " << cell_name(a.cell) << '\n';
  os << "d_h = " << a.d_h << '\n';
  os << "d_v = " << a.d_v << '\n';
  os << "n = " << a.n << '\n';
  os << "rows = " << a.rows << '\n';
  os << "cols = " << a.cols << '\n';
  os << "complex = " << (a.complex_output ? "true" : "false") << '\n';
  os << "marshall_sign = " << (a.marshall_sign ? "true" : "false") << '\n';
  os << "c = " << detail::format_double(a.c) << '\n';
  os << "ball_eps = " << detail::format_double(a.ball_eps) << '\n';
  os << "seed = " << ck.seed << '\n';
  os << "epoch = " << ck.epoch << '\n';
  for (const auto& [k, v] : ck.extra) os << "meta." << k << " = " << v << '\n';
  os << "values = " << ck.params.size() << '\n';
  os << "tensors = " << ck.params.tensors().size() << '\n';
  for (const Tensor& t : ck.params.tensors()) {
    os << "tensor = " << t.name << ' ' << t.rows << ' ' << t.cols << ' ' << manifold_name(t.manifold) << '\n';
  }
  return os.str();
}

struct ManifestTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  Manifold manifold = Manifold::Euclidean;
};

struct ParsedManifest {
  Checkpoint header;  // params left empty
  std::size_t values = 0;
  std::vector<ManifestTensor> tensors;
};

inline ParsedManifest parse_manifest(std::string_view text) {
  ParsedManifest out;
  AnsatzConfig& a = out.header.ansatz;
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> seen;
  std::size_t declared_tensors = 0;
  bool have_format = false;
  bool have_values = false;
  bool have_tensors = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw CheckpointError("manifest line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key != "tensor") {
      for (const auto& s : seen) {
        if (s == key) throw CheckpointError("manifest: duplicate key '" + key + "'");
      }
      seen.push_back(key);
    }
    if (key == "format") {
      if (value != kManifestFormat) throw CheckpointError("manifest: unknown format '" + value + "'");
      have_format = true;
    } else if (key == "version") {
      if (detail::parse_number<int>(key, value) != kManifestVersion) {
        throw CheckpointError("manifest: unsupported version " + value);
      }
    } else if (key == "cell") {
      try {
        a.cell = parse_cell_kind(value);
      } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("manifest: ") + e.what());
      }
    } else if (key == "d_h") {
      a.d_h = detail::parse_number<int>(key, value);
    } else if (key == "d_v") {
      a.d_v = detail::parse_number<int>(key, value);
    } else if (key == "n") {
      a.n = detail::parse_number<int>(key, value);
    } else if (key == "rows") {
      a.rows = detail::parse_number<int>(key, value);
    } else if (key == "cols") {
      a.cols = detail::parse_number<int>(key, value);
    } else if (key == "complex") {
      a.complex_output = detail::parse_bool(key, value);
    } else if (key == "marshall_sign") {
      a.marshall_sign = detail::parse_bool(key, value);
    } else if (key == "c") {
      a.c = detail::parse_number<double>(key, value);
    } else if (key == "ball_eps") {
      a.ball_eps = detail::parse_number<double>(key, value);
    } else if (key == "seed") {
      out.header.seed = detail::parse_number<std::uint64_t>(key, value);
    } else if (key == "epoch") {
      out.header.epoch = detail::parse_number<int>(key, value);
    } else if (key == "values") {
      out.values = detail::parse_number<std::size_t>(key, value);
      have_values = true;
    } else if (key == "tensors") {
      declared_tensors = detail::parse_number<std::size_t>(key, value);
      have_tensors = true;
    } else if (key == "tensor") {
      std::istringstream fields(value);
      ManifestTensor t;
      std::string manifold;
      std::string trailing;
      if (!(fields >> t.name >> t.rows >> t.cols >> manifold) || (fields >> trailing)) {
        throw CheckpointError("manifest: malformed tensor entry '" + value + "'");
      }
      if (manifold == "euclidean") {
        t.manifold = Manifold::Euclidean;
      } else if (manifold == "hyperbolic") {
        t.manifold = Manifold::Hyperbolic;
      } else {
        throw CheckpointError("manifest: unknown manifold tag '" + manifold + "'");
      }
      out.tensors.push_back(std::move(t));
    } else if (key.starts_with("meta.")) {
      out.header.extra.emplace_back(key.substr(5), value);
    } else {
      throw CheckpointError("manifest: unknown key '" + key + "'");
    }
  }
  if (!have_format) throw CheckpointError("manifest: missing format line");
  for (const char* required : {"cell", "d_h", "n", "seed", "epoch"}) {
    if (std::find(seen.begin(), seen.end(), required) == seen.end()) {
      throw CheckpointError(std::string("manifest: missing key '") + required + "'");
    }
  }
  if (!have_values || !have_tensors) throw CheckpointError("manifest: missing values/tensors count");
  if (declared_tensors != out.tensors.size()) throw CheckpointError("manifest: tensor count mismatch");
  return out;
}

// Validates the manifest against the layout its ansatz fields imply and
// fills the parameters from blob bytes.
inline Checkpoint assemble_checkpoint(const ParsedManifest& m, std::string_view blob) {
  Checkpoint ck = m.header;
  try {
    ck.params = ParameterStore::for_config(ck.ansatz);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("manifest: invalid ansatz: ") + e.what());
  }
  const auto& expected = ck.params.tensors();
  if (expected.size() != m.tensors.size()) {
    throw CheckpointError("manifest: " + std::to_string(m.tensors.size()) + " tensors listed, ansatz has " +
                          std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Tensor& e = expected[i];
    const ManifestTensor& t = m.tensors[i];
    if (e.name != t.name || e.rows != t.rows || e.cols != t.cols || e.manifold != t.manifold) {
      throw CheckpointError("manifest: tensor " + std::to_string(i) + " '" + t.name + "' does not match ansatz layout ('" +
                            e.name + "' " + std::to_string(e.rows) + "x" + std::to_string(e.cols) + ")");
    }
  }
  if (m.values != ck.params.size()) throw CheckpointError("manifest: value count does not match tensor shapes");
  if (blob.size() != m.values * 8) {
    throw CheckpointError("blob holds " + std::to_string(blob.size()) + " bytes, manifest expects " +
                          std::to_string(m.values * 8));
  }
  const Vec values = decode_blob(blob);
  if (!values.allFinite()) throw CheckpointError("blob contains non-finite values");
  ck.params.assign(values);
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path,
                            const Checkpoint& ck) {
  if (ck.params.size() != ParameterStore::for_config(ck.ansatz).size()) {
    throw CheckpointError("save: parameters do not match the ansatz layout");
  }
  detail::write_file_atomic(blob_path, encode_blob(ck.params.flatten()));
  detail::write_file_atomic(manifest_path, write_manifest(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& manifest_path, const std::filesystem::path& blob_path) {
  const ParsedManifest m = parse_manifest(detail::read_file(manifest_path));
  return assemble_checkpoint(m, detail::read_file(blob_path));
}

// Run-directory layout: <run>/manifest and <run>/best.ckpt.
inline constexpr std::string_view kManifestFile = "manifest";
inline constexpr std::string_view kBlobFile = "best.ckpt";

inline void save_run_checkpoint(const std::filesystem::path& run_dir, const Checkpoint& ck) {
  save_checkpoint(run_dir / kManifestFile, run_dir / kBlobFile, ck);
}

inline Checkpoint load_run_checkpoint(const std::filesystem::path& run_dir) {
  return load_checkpoint(run_dir / kManifestFile, run_dir / kBlobFile);
}

}  // namespace hypnqs
