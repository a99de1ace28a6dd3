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

// First-order optimality residuals of the split problem. A point
// (X, Y, Z, U, V) with multipliers (Lambda, Pi) is a KKT point iff
//
//   (XY - Z) Y^T + Lambda = 0        X^T (XY - Z) + Pi = 0
//   P_Omega^c(XY - Z) = 0            P_Omega(Z - M) = 0
//   X - U = 0                        Y - V = 0
//   Lambda <= 0 <= U, Lambda .* U = 0
//   Pi <= 0 <= V,     Pi .* V = 0
//
// Each condition maps to one Frobenius-norm residual below.

#ifndef NMFC_KKT_HPP_
#define NMFC_KKT_HPP_

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "nmfc/admm.hpp"
#include "nmfc/matstore.hpp"

namespace nmfc {

struct KktResiduals {
  double stat_x = 0;
  double stat_y = 0;
  double comp_mask = 0;
  double feas_mask = 0;
  double xu = 0;
  double yv = 0;
  double sign_lambda = 0;
  double comp_lambda_u = 0;
  double sign_pi = 0;
  double comp_pi_v = 0;

  double max() const {
    return std::max({stat_x, stat_y, comp_mask, feas_mask, xu, yv, sign_lambda,
                     comp_lambda_u, sign_pi, comp_pi_v});
  }
};

struct KktReport {
  KktResiduals raw;
  // raw / (1 + ||observed values||_2)
  KktResiduals scaled;
  double normalizer = 1;

  // Flat "name value" listing, in condition order.
  std::vector<std::pair<std::string, double>> entries(bool use_scaled) const {
    const KktResiduals& r = use_scaled ? scaled : raw;
    return {{"r_stat_x", r.stat_x},
            {"r_stat_y", r.stat_y},
            {"r_comp_mask", r.comp_mask},
            {"r_feas_mask", r.feas_mask},
            {"r_xu", r.xu},
            {"r_yv", r.yv},
            {"r_sign_lambda", r.sign_lambda},
            {"r_comp_lambda_u", r.comp_lambda_u},
            {"r_sign_pi", r.sign_pi},
            {"r_comp_pi_v", r.comp_pi_v}};
  }
};

template <typename Scalar>
KktReport kkt_residuals(const Matrix<Scalar>& x, const Matrix<Scalar>& y,
                        const Matrix<Scalar>& z, const Matrix<Scalar>& u,
                        const Matrix<Scalar>& v, const Matrix<Scalar>& lambda,
                        const Matrix<Scalar>& pi,
                        const ObservedMatrix<Scalar>& a) {
  const Index m = a.rows(), n = a.cols(), q = x.cols();
  auto expect = [](const char* name, const Matrix<Scalar>& mat, Index rows,
                   Index cols) {
    if (mat.rows() != rows || mat.cols() != cols)
      throw Error(std::string("dimension mismatch: ") + name + " is " +
                  shape_string(mat.rows(), mat.cols()) + ", expected " +
                  shape_string(rows, cols));
  };
  expect("X", x, m, q);
  expect("Y", y, q, n);
  expect("Z", z, m, n);
  expect("U", u, m, q);
  expect("V", v, q, n);
  expect("Lambda", lambda, m, q);
  expect("Pi", pi, q, n);

  const Matrix<Scalar> misfit = x * y - z;
  KktReport report;
  KktResiduals& r = report.raw;
  r.stat_x = static_cast<double>((misfit * y.transpose() + lambda).norm());
  r.stat_y = static_cast<double>((x.transpose() * misfit + pi).norm());
  r.comp_mask =
      static_cast<double>(project_mask_complement(misfit, a.mask()).norm());
  {
    Scalar sum = 0;
    Index k = 0;
    for (const auto& e : a.mask().entries()) {
      const Scalar d = z(e.row, e.col) - a.values()(k++);
      sum += d * d;
    }
    r.feas_mask = static_cast<double>(std::sqrt(sum));
  }
  r.xu = static_cast<double>((x - u).norm());
  r.yv = static_cast<double>((y - v).norm());
  r.sign_lambda = static_cast<double>(project_nonneg(lambda).norm() +
                                      project_nonneg(-u).norm());
  r.comp_lambda_u = static_cast<double>(lambda.cwiseProduct(u).norm());
  r.sign_pi = static_cast<double>(project_nonneg(pi).norm() +
                                  project_nonneg(-v).norm());
  r.comp_pi_v = static_cast<double>(pi.cwiseProduct(v).norm());

  report.normalizer = 1.0 + static_cast<double>(a.norm());
  const double d = report.normalizer;
  report.scaled = {r.stat_x / d,      r.stat_y / d,      r.comp_mask / d,
                   r.feas_mask / d,   r.xu / d,          r.yv / d,
                   r.sign_lambda / d, r.comp_lambda_u / d, r.sign_pi / d,
                   r.comp_pi_v / d};
  return report;
}

template <typename Scalar>
KktReport kkt_residuals(const SolverState<Scalar>& s,
                        const ObservedMatrix<Scalar>& a) {
  return kkt_residuals(s.X, s.Y, s.Z, s.U, s.V, s.Lambda, s.Pi, a);
}

}  // namespace nmfc

#endif  // NMFC_KKT_HPP_
