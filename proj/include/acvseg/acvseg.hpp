// Copyright 2026 The acvseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// acvseg/acvseg.hpp -- umbrella header.

#ifndef ACVSEG_ACVSEG_HPP
#define ACVSEG_ACVSEG_HPP

#include "acvseg/acv.hpp"
#include "acvseg/core.hpp"
#include "acvseg/data.hpp"
#include "acvseg/eval.hpp"
#include "acvseg/hmm.hpp"
#include "acvseg/infer.hpp"
#include "acvseg/oracle.hpp"
#include "acvseg/parallel.hpp"
#include "acvseg/scorer.hpp"
#include "acvseg/train.hpp"

#endif  // ACVSEG_ACVSEG_HPP
