// Copyright 2026 The tesuji Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "tesuji/board.hpp"
#include "tesuji/checkpoint.hpp"
#include "tesuji/dataset.hpp"
#include "tesuji/encoder.hpp"
#include "tesuji/error.hpp"
#include "tesuji/evaluator.hpp"
#include "tesuji/gtp.hpp"
#include "tesuji/net.hpp"
#include "tesuji/rng.hpp"
#include "tesuji/sgf.hpp"
#include "tesuji/symmetry.hpp"
#include "tesuji/tensor.hpp"
#include "tesuji/trainer.hpp"
