// Copyright 2026 The ssvh Authors.
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

#ifndef SSVH_TENSOR_HPP_
#define SSVH_TENSOR_HPP_

#include <Eigen/Dense>

#include <string>

#include "ssvh/error.hpp"

namespace ssvh {

// Row-major so that one row is one frame, token or code.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

inline void require_shape(const Mat& m, Index rows, Index cols,
                          const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(what + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_same_shape(const Mat& a, const Mat& b,
                               const std::string& what) {
  require_shape(b, a.rows(), a.cols(), what);
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace ssvh

#endif  // SSVH_TENSOR_HPP_
