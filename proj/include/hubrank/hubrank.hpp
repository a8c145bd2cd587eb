// Copyright 2026 The hubrank Authors
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

#include "hubrank/bench.hpp"
#include "hubrank/content_hash.hpp"
#include "hubrank/errors.hpp"
#include "hubrank/evidence.hpp"
#include "hubrank/features.hpp"
#include "hubrank/hub_io.hpp"
#include "hubrank/logme.hpp"
#include "hubrank/parallel.hpp"
#include "hubrank/predictive.hpp"
#include "hubrank/ranking.hpp"
#include "hubrank/svd.hpp"
#include "hubrank/tuning_sim.hpp"
