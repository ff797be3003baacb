// Copyright 2026 The clinchlab Authors.
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

#pragma once

#include "clinchlab/analysis.hpp"
#include "clinchlab/core.hpp"
#include "clinchlab/engine_divisible.hpp"
#include "clinchlab/engine_indivisible.hpp"
#include "clinchlab/error.hpp"
#include "clinchlab/market_io.hpp"
#include "clinchlab/oracle.hpp"
#include "clinchlab/random_markets.hpp"
#include "clinchlab/rational.hpp"
#include "clinchlab/report_io.hpp"
#include "clinchlab/trace_io.hpp"
