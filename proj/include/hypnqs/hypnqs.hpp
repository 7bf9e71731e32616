// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The hypnqs Authors.

#pragma once

#include "hypnqs/ansatz.hpp"
#include "hypnqs/autodiff.hpp"
#include "hypnqs/checkpoint.hpp"
#include "hypnqs/errors.hpp"
#include "hypnqs/exact.hpp"
#include "hypnqs/experiment.hpp"
#include "hypnqs/finite_diff.hpp"
#include "hypnqs/geometry.hpp"
#include "hypnqs/geometry_check.hpp"
#include "hypnqs/hamiltonian.hpp"
#include "hypnqs/linalg.hpp"
#include "hypnqs/metrics.hpp"
#include "hypnqs/parallel.hpp"
#include "hypnqs/random.hpp"
#include "hypnqs/vmc.hpp"
