// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.

#pragma once

#include <stdexcept>
#include <string>

namespace hypnqs {

// Invalid experiment configuration or command-line input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite energies, gradients or parameters during training or inference.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or inconsistent checkpoint files.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hypnqs
