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

#ifndef SHIFTHPO_SEARCH_SPACE_HPP
#define SHIFTHPO_SEARCH_SPACE_HPP

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "shifthpo/errors.hpp"

namespace shifthpo {

enum class scale_kind { linear, log_scale };

struct space_dim {
  std::string name;
  double low = 0.0;
  double high = 1.0;
  scale_kind scale = scale_kind::linear;
};

/// A point in the search space, stored in original (untransformed) scale.
struct hyper_params {
  Eigen::VectorXd values;
};

/// Box-constrained hyperparameter domain with per-dimension linear or log
/// scaling. All surrogate work happens in unit-cube coordinates; log dims
/// are mapped through their logarithm first.
struct search_space {
  std::vector<space_dim> dims;

  Eigen::Index size() const { return static_cast<Eigen::Index>(dims.size()); }

  void validate() const {
    if (dims.empty()) throw config_error("search_space: no dimensions");
    for (const auto& d : dims) {
      if (!(d.low < d.high)) {
        throw config_error("search_space: dim '" + d.name + "' needs low < high");
      }
      if (d.scale == scale_kind::log_scale && !(d.low > 0.0)) {
        throw config_error("search_space: log dim '" + d.name + "' needs low > 0");
      }
    }
  }

  bool contains(const hyper_params& p) const {
    if (p.values.size() != size()) return false;
    for (Eigen::Index i = 0; i < size(); ++i) {
      const auto& d = dims[static_cast<std::size_t>(i)];
      if (p.values(i) < d.low || p.values(i) > d.high) return false;
    }
    return true;
  }

  Eigen::VectorXd to_unit(const hyper_params& p) const {
    if (p.values.size() != size()) throw input_error("search_space: dimension mismatch");
    Eigen::VectorXd u(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      const auto& d = dims[static_cast<std::size_t>(i)];
      if (d.scale == scale_kind::log_scale) {
        u(i) = (std::log(p.values(i)) - std::log(d.low)) / (std::log(d.high) - std::log(d.low));
      } else {
        u(i) = (p.values(i) - d.low) / (d.high - d.low);
      }
    }
    return u;
  }

  hyper_params from_unit(const Eigen::VectorXd& u) const {
    if (u.size() != size()) throw input_error("search_space: dimension mismatch");
    hyper_params p;
    p.values.resize(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      const auto& d = dims[static_cast<std::size_t>(i)];
      double v;
      if (d.scale == scale_kind::log_scale) {
        v = std::exp(std::log(d.low) + u(i) * (std::log(d.high) - std::log(d.low)));
      } else {
        v = d.low + u(i) * (d.high - d.low);
      }
      p.values(i) = std::min(d.high, std::max(d.low, v));
    }
    return p;
  }
};

}  // namespace shifthpo

#endif  // SHIFTHPO_SEARCH_SPACE_HPP
