// Copyright 2026 The PDSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "pdsm/alignment.hpp"
#include "pdsm/attribution.hpp"
#include "pdsm/discretize.hpp"
#include "pdsm/error.hpp"
#include "pdsm/evaluation.hpp"
#include "pdsm/manifest.hpp"
#include "pdsm/matrix.hpp"
#include "pdsm/model.hpp"
#include "pdsm/model_io.hpp"
#include "pdsm/npy.hpp"
#include "pdsm/parallel.hpp"
#include "pdsm/rng.hpp"
#include "pdsm/synthgen.hpp"
#include "pdsm/train.hpp"
#include "pdsm/types.hpp"
