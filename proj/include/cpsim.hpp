// Copyright 2026 The cpsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.
#pragma once

#include "cpsim/common.hpp"
#include "cpsim/grid.hpp"
#include "cpsim/hilbert.hpp"
#include "cpsim/rng.hpp"
#include "cpsim/quadrature.hpp"
#include "cpsim/stats.hpp"
#include "cpsim/fock.hpp"
#include "cpsim/collapse_ops.hpp"
#include "cpsim/exact_cp.hpp"
#include "cpsim/dynamics.hpp"
#include "cpsim/lindblad.hpp"
#include "cpsim/coarse_grain.hpp"
#include "cpsim/measure.hpp"
#include "cpsim/gravity.hpp"
#include "cpsim/io.hpp"
#include "cpsim/config.hpp"
#include "cpsim/experiments.hpp"
