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

#ifndef SHIFTHPO_NUMERIC_HPP
#define SHIFTHPO_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>

#include "shifthpo/errors.hpp"

namespace shifthpo {

/// Neumaier-compensated accumulator. Keeps long loss sums accurate enough
/// for the tight closed-form assertions used throughout the test suite.
class compensated_sum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> xs) {
  compensated_sum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw input_error("mean: empty input");
  return compensated_total(xs) / static_cast<double>(xs.size());
}

/// Standard error of the mean; zero for a single observation.
inline double standard_error(std::span<const double> xs) {
  if (xs.empty()) throw input_error("standard_error: empty input");
  const std::size_t n = xs.size();
  if (n == 1) return 0.0;
  const double m = mean(xs);
  compensated_sum sq;
  for (double x : xs) sq.add((x - m) * (x - m));
  const double var = sq.value() / static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n));
}

/// SplitMix64 step; used to derive independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic sub-seed for stage `tag` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t state = seed ^ (0x2545f4914f6cdd1dULL * (tag + 1));
  return splitmix64(state);
}

}  // namespace shifthpo

#endif  // SHIFTHPO_NUMERIC_HPP
