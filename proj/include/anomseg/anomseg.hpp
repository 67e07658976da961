// Copyright 2026 The anomseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "anomseg/config.hpp"
#include "anomseg/errors.hpp"
#include "anomseg/heatmap.hpp"
#include "anomseg/io.hpp"
#include "anomseg/manifest.hpp"
#include "anomseg/metrics.hpp"
#include "anomseg/npy.hpp"
#include "anomseg/pipeline.hpp"
#include "anomseg/png.hpp"
#include "anomseg/scoring.hpp"
#include "anomseg/synth.hpp"
#include "anomseg/tensor.hpp"
#include "anomseg/text_enhance.hpp"
