// Copyright 2026 The shift-hpo Authors
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

#ifndef SHIFTHPO_SHIFTHPO_HPP
#define SHIFTHPO_SHIFTHPO_HPP

#include "shifthpo/bo.hpp"
#include "shifthpo/dataset.hpp"
#include "shifthpo/density_ratio.hpp"
#include "shifthpo/errors.hpp"
#include "shifthpo/estimators.hpp"
#include "shifthpo/gp.hpp"
#include "shifthpo/harness.hpp"
#include "shifthpo/learners.hpp"
#include "shifthpo/log.hpp"
#include "shifthpo/numeric.hpp"
#include "shifthpo/search_space.hpp"

#endif  // SHIFTHPO_SHIFTHPO_HPP
