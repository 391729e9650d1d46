// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include "omama/attention.hpp"
#include "omama/checkpoint.hpp"
#include "omama/config.hpp"
#include "omama/delaunay.hpp"
#include "omama/encoder.hpp"
#include "omama/error.hpp"
#include "omama/head.hpp"
#include "omama/inference.hpp"
#include "omama/mask.hpp"
#include "omama/metrics.hpp"
#include "omama/mining.hpp"
#include "omama/model.hpp"
#include "omama/ops.hpp"
#include "omama/pack.hpp"
#include "omama/rng.hpp"
#include "omama/synthetic.hpp"
#include "omama/tape.hpp"
#include "omama/tensor.hpp"
#include "omama/trainer.hpp"
