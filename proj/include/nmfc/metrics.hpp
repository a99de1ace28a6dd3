// Copyright 2026 The NMFC Authors. All Rights Reserved.
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

#ifndef NMFC_METRICS_HPP_
#define NMFC_METRICS_HPP_

#include <cmath>
#include <limits>

#include "nmfc/types.hpp"

namespace nmfc {

struct EvalReport {
  double rel_err = 0;
  double mse = 0;
  // +inf when mse == 0.
  double psnr = std::numeric_limits<double>::infinity();
  // Wall-clock seconds of the solve that produced the estimate.
  double cpu_seconds = 0;
};

// rel_err = ||M_hat - M||_F / ||M||_F, mse = ||M_hat - M||_F^2 / (mn),
// psnr = 20 log10(max_i / sqrt(mse)).
template <typename DerivedA, typename DerivedB>
EvalReport evaluate(const Eigen::MatrixBase<DerivedA>& m_hat,
                    const Eigen::MatrixBase<DerivedB>& m, double max_i) {
  if (m_hat.rows() != m.rows() || m_hat.cols() != m.cols())
    throw Error("shape mismatch: estimate is " +
                shape_string(m_hat.rows(), m_hat.cols()) + ", reference is " +
                shape_string(m.rows(), m.cols()));
  if (!(max_i > 0)) throw Error("max_i must be > 0");
  const double err2 = static_cast<double>((m_hat - m).squaredNorm());
  const double ref = static_cast<double>(m.norm());
  EvalReport r;
  r.rel_err = ref > 0 ? std::sqrt(err2) / ref : std::sqrt(err2);
  r.mse = err2 / static_cast<double>(m.size());
  r.psnr = r.mse > 0 ? 20.0 * std::log10(max_i / std::sqrt(r.mse))
                     : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace nmfc

#endif  // NMFC_METRICS_HPP_
