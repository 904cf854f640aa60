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

#ifndef SHIFTHPO_ERRORS_HPP
#define SHIFTHPO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace shifthpo {

/// Base class for all errors raised by the library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid user-supplied configuration (names the offending field).
class config_error : public error {
 public:
  using error::error;
};

/// Dimension mismatches, empty inputs, out-of-domain arguments.
class input_error : public error {
 public:
  using error::error;
};

/// CSV ingestion failure; message carries the row/column location.
class ingest_error : public error {
 public:
  using error::error;
};

/// A requested data split would leave a fold empty.
class split_error : public error {
 public:
  using error::error;
};

/// Density-ratio model fitting failed (singular system, empty grid).
class fit_error : public error {
 public:
  using error::error;
};

/// A source weighting violates the sum constraint beyond tolerance.
class weighting_error : public error {
 public:
  using error::error;
};

/// Learner training is impossible (e.g. all row weights zero).
class training_error : public error {
 public:
  using error::error;
};

/// Linear algebra broke down (factorization failure past all fallbacks).
class numeric_error : public error {
 public:
  using error::error;
};

/// A distributional assumption does not hold (e.g. source support).
class assumption_error : public error {
 public:
  using error::error;
};

}  // namespace shifthpo

#endif  // SHIFTHPO_ERRORS_HPP
