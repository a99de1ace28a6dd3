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

// Comparison solvers:
//   als         projected alternating least squares, completed through a
//               Z variable refilled with the observations after each sweep
//   mult        Lee-Seung multiplicative updates on the zero-filled data
//   lmafit-sor  nonlinear SOR for min ||XY - Z|| s.t. P_Omega(Z - M) = 0,
//               fixed rank, fixed weight omega
//   fpca        gradient step on the masked misfit + singular value shrinkage

#ifndef NMFC_BASELINES_HPP_
#define NMFC_BASELINES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nmfc/admm.hpp"
#include "nmfc/matstore.hpp"
#include "nmfc/types.hpp"

namespace nmfc {

enum class BaselineKind { kAls, kMult, kLmafitSor, kFpca };

inline std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kAls: return "als";
    case BaselineKind::kMult: return "mult";
    case BaselineKind::kLmafitSor: return "lmafit-sor";
    case BaselineKind::kFpca: return "fpca";
  }
  return "unknown";
}

inline BaselineKind baseline_kind_from_string(std::string_view name) {
  if (name == "als") return BaselineKind::kAls;
  if (name == "mult") return BaselineKind::kMult;
  if (name == "lmafit-sor") return BaselineKind::kLmafitSor;
  if (name == "fpca") return BaselineKind::kFpca;
  throw Error("unknown baseline solver '" + std::string(name) + "'");
}

template <typename Scalar>
struct BaselineParams {
  Index q = 1;
  Scalar omega = 1;
  Scalar epsilon = Scalar(1e-9);
  Scalar tau = 1;
  // Unset: 1e-2 * sigma_max of the zero-filled observation.
  std::optional<Scalar> mu;
  Scalar tol = Scalar(1e-5);
  int maxiter = 2000;
  std::uint64_t seed = 0;

  void validate() const {
    if (q < 1) throw Error("q must be >= 1");
    if (!(omega >= 1)) throw Error("omega must be >= 1");
    if (!(epsilon > 0)) throw Error("epsilon must be > 0");
    if (!(tau > 0)) throw Error("tau must be > 0");
    if (mu && !(*mu > 0)) throw Error("mu must be > 0");
    if (!(tol > 0)) throw Error("tol must be > 0");
    if (maxiter < 1) throw Error("maxiter must be >= 1");
  }
};

// Moore-Penrose inverse of a symmetric positive semidefinite matrix from its
// eigendecomposition; eigenvalues below n * eps * lambda_max count as zero.
template <typename Scalar>
Matrix<Scalar> pinv_psd(const Matrix<Scalar>& s) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(s);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const auto& w = eig.eigenvalues();
  const Scalar top = w.size() ? w.cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar cutoff = static_cast<Scalar>(s.rows()) *
                        std::numeric_limits<Scalar>::epsilon() * top;
  Vector<Scalar> inv(w.size());
  for (Index i = 0; i < w.size(); ++i)
    inv(i) = w(i) > cutoff ? Scalar(1) / w(i) : Scalar(0);
  const auto& q = eig.eigenvectors();
  return q * inv.asDiagonal() * q.transpose();
}

// X <- max(0, Z Y^T (Y Y^T)^+), then Y <- max(0, (X^T X)^+ X^T Z) with the
// new X. The incoming X is not read.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> als_step(const Matrix<Scalar>& /*x*/,
                                                   const Matrix<Scalar>& y,
                                                   const Matrix<Scalar>& z) {
  Matrix<Scalar> x_new = project_nonneg(
      (z * y.transpose()) * pinv_psd<Scalar>(y * y.transpose()));
  Matrix<Scalar> y_new = project_nonneg(
      pinv_psd<Scalar>(x_new.transpose() * x_new) * (x_new.transpose() * z));
  return {std::move(x_new), std::move(y_new)};
}

// Multiplicative updates against the zero-filled matrix `m_tilde`.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> mult_step(
    const Matrix<Scalar>& x, const Matrix<Scalar>& y,
    const Matrix<Scalar>& m_tilde, Scalar epsilon) {
  const Matrix<Scalar> yyt = y * y.transpose();
  Matrix<Scalar> x_new =
      x.cwiseProduct(m_tilde * y.transpose())
          .cwiseQuotient(x * yyt +
                         Matrix<Scalar>::Constant(x.rows(), x.cols(), epsilon));
  const Matrix<Scalar> xtx = x_new.transpose() * x_new;
  Matrix<Scalar> y_new =
      y.cwiseProduct(x_new.transpose() * m_tilde)
          .cwiseQuotient(xtx * y +
                         Matrix<Scalar>::Constant(y.rows(), y.cols(), epsilon));
  return {std::move(x_new), std::move(y_new)};
}

// One nonlinear SOR sweep:
//   X+ = Z Y^T (Y Y^T)^+,        X(w) = w X+ + (1 - w) X
//   Y+ = (X(w)^T X(w))^+ X(w)^T Z, Y(w) = w Y+ + (1 - w) Y
//   Z+ = X(w) Y(w) + P_Omega(M - X(w) Y(w))
template <typename Scalar>
std::tuple<Matrix<Scalar>, Matrix<Scalar>, Matrix<Scalar>> lmafit_sor_step(
    const Matrix<Scalar>& x, const Matrix<Scalar>& y, const Matrix<Scalar>& z,
    const ObservedMatrix<Scalar>& a, Scalar omega) {
  if (!(omega >= 1)) throw Error("omega must be >= 1");
  const Matrix<Scalar> x_ls =
      (z * y.transpose()) * pinv_psd<Scalar>(y * y.transpose());
  Matrix<Scalar> x_w = omega * x_ls + (Scalar(1) - omega) * x;
  const Matrix<Scalar> y_ls =
      pinv_psd<Scalar>(x_w.transpose() * x_w) * (x_w.transpose() * z);
  Matrix<Scalar> y_w = omega * y_ls + (Scalar(1) - omega) * y;
  Matrix<Scalar> z_w = x_w * y_w;
  a.scatter_into(z_w);
  return {std::move(x_w), std::move(y_w), std::move(z_w)};
}

// U max(Sigma - nu, 0) V^T.
template <typename Derived>
typename Derived::PlainObject svd_shrink(const Eigen::MatrixBase<Derived>& a,
                                         typename Derived::Scalar nu) {
  using Scalar = typename Derived::Scalar;
  if (nu < 0) throw Error("shrinkage threshold must be >= 0");
  Eigen::BDCSVD<typename Derived::PlainObject> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error("SVD failed");
  const Vector<Scalar> shrunk =
      (svd.singularValues().array() - nu).cwiseMax(Scalar(0)).matrix();
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

// X <- S_{tau mu}(X - tau P_Omega(X - M)).
template <typename Scalar>
Matrix<Scalar> fpca_step(const Matrix<Scalar>& x,
                         const ObservedMatrix<Scalar>& a, Scalar tau,
                         Scalar mu) {
  if (!(tau > 0) || mu < 0) throw Error("fpca needs tau > 0 and mu >= 0");
  check_mask_shape(x, a.mask());
  Matrix<Scalar> y = x;
  Index k = 0;
  for (const auto& e : a.mask().entries())
    y(e.row, e.col) -= tau * (x(e.row, e.col) - a.values()(k++));
  if (mu == 0) return y;
  return svd_shrink(y, tau * mu);
}

template <typename Scalar>
Scalar default_fpca_mu(const ObservedMatrix<Scalar>& a) {
  Eigen::BDCSVD<Matrix<Scalar>> svd(a.to_dense());
  return Scalar(1e-2) * svd.singularValues()(0);
}

namespace detail {

template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> truncated_factors(
    const Matrix<Scalar>& z, Index q) {
  Eigen::BDCSVD<Matrix<Scalar>> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error("SVD failed");
  const Index r = std::min<Index>(q, svd.singularValues().size());
  Matrix<Scalar> x = Matrix<Scalar>::Zero(z.rows(), q);
  Matrix<Scalar> y = Matrix<Scalar>::Zero(q, z.cols());
  x.leftCols(r) = svd.matrixU().leftCols(r) *
                  svd.singularValues().head(r).asDiagonal();
  y.topRows(r) = svd.matrixV().leftCols(r).transpose();
  return {std::move(x), std::move(y)};
}

}  // namespace detail

template <typename Scalar>
Solution<Scalar> run_baseline(BaselineKind kind,
                              const ObservedMatrix<Scalar>& a,
                              const BaselineParams<Scalar>& params) {
  params.validate();
  const Scalar norm = a.norm();
  if (!(norm > 0)) throw Error("empty observation: ||A||_F is zero");
  const Index m = a.rows(), n = a.cols(), q = params.q;

  Rng rng(params.seed);
  Matrix<Scalar> y = rng.uniform_matrix<Scalar>(q, n);
  Matrix<Scalar> x = rng.uniform_matrix<Scalar>(m, q);
  Matrix<Scalar> z = a.to_dense();
  const Scalar mu =
      kind == BaselineKind::kFpca ? params.mu.value_or(default_fpca_mu(a)) : 0;
  if (kind == BaselineKind::kFpca) x = Matrix<Scalar>::Zero(m, n);

  ResidualHistory<Scalar> history(true);
  StopReason reason = StopReason::kMaxIter;
  int it = 0;
  while (it < params.maxiter) {
    switch (kind) {
      case BaselineKind::kAls: {
        std::tie(x, y) = als_step(x, y, z);
        z = x * y;
        a.scatter_into(z);
        break;
      }
      case BaselineKind::kMult:
        std::tie(x, y) = mult_step(x, y, z, params.epsilon);
        break;
      case BaselineKind::kLmafitSor:
        std::tie(x, y, z) = lmafit_sor_step(x, y, z, a, params.omega);
        break;
      case BaselineKind::kFpca:
        x = fpca_step(x, a, params.tau, mu);
        break;
    }
    ++it;
    Scalar f;
    if (kind == BaselineKind::kFpca) {
      Scalar sum = 0;
      Index k = 0;
      for (const auto& e : a.mask().entries()) {
        const Scalar d = x(e.row, e.col) - a.values()(k++);
        sum += d * d;
      }
      f = std::sqrt(sum) / norm;
    } else {
      f = masked_misfit(x, y, a) / norm;
    }
    history.push(f);
    if (auto stop = stopping_met(history, params.tol)) {
      reason = *stop;
      break;
    }
  }

  Solution<Scalar> out;
  if (kind == BaselineKind::kFpca) {
    std::tie(out.X, out.Y) = detail::truncated_factors(x, q);
  } else {
    out.X = std::move(x);
    out.Y = std::move(y);
  }
  out.iterations = it;
  out.stop_reason = reason;
  out.final_f = masked_misfit(out.X, out.Y, a) / norm;
  out.f_trace = history.trace();
  return out;
}

}  // namespace nmfc

#endif  // NMFC_BASELINES_HPP_
