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

// Alternating direction augmented-Lagrangian solver for nonnegative matrix
// factorization with missing entries. The problem
//
//   min ||P_Omega(XY - M)||_F^2   s.t.  X >= 0, Y >= 0
//
// is split as
//
//   min 1/2 ||XY - Z||_F^2  s.t.  X = U, Y = V, U >= 0, V >= 0,
//                                 P_Omega(Z - M) = 0
//
// and each sweep minimizes the augmented Lagrangian
//
//   1/2||XY - Z||^2 + <Lambda, X - U> + <Pi, Y - V>
//     + alpha/2 ||X - U||^2 + beta/2 ||Y - V||^2
//
// over X, Y, Z, U, V in that order (each block has a closed form), followed
// by a damped ascent step of length gamma on the multipliers Lambda and Pi.
//
// The input is rescaled so that ||A||_F equals `scale_target` before
// iterating; the returned X is divided by the same factor so that XY is in
// the units of the data.

#ifndef NMFC_ADMM_HPP_
#define NMFC_ADMM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nmfc/matstore.hpp"
#include "nmfc/types.hpp"

namespace nmfc {

// Upper end of the admissible multiplier step length interval (0, 1.618).
inline constexpr double kGammaBound = 1.618;

enum class StopReason { kRelChange, kAbsResidual, kMaxIter };

inline std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kRelChange: return "rel-change";
    case StopReason::kAbsResidual: return "abs-residual";
    case StopReason::kMaxIter: return "maxiter";
  }
  return "unknown";
}

inline StopReason stop_reason_from_string(std::string_view name) {
  if (name == "rel-change") return StopReason::kRelChange;
  if (name == "abs-residual") return StopReason::kAbsResidual;
  if (name == "maxiter") return StopReason::kMaxIter;
  throw Error("unknown stop reason '" + std::string(name) + "'");
}

// Which pair is returned as the factorization. The iterates (X, Y) are only
// asymptotically nonnegative; the splitting copies (U, V) are nonnegative by
// construction.
// Largest value of Scalar that lies just inside the step-length bound.
template <typename Scalar>
Scalar default_gamma() {
  Scalar g = static_cast<Scalar>(kGammaBound - 1e-12);
  while (static_cast<double>(g) >= kGammaBound) g = std::nextafter(g, Scalar(0));
  return g;
}

enum class FactorSource { kIterates, kSplitting };

template <typename Scalar>
struct SolverParams {
  Index q = 1;
  Scalar alpha = 1;
  Scalar beta = 1;
  Scalar gamma = default_gamma<Scalar>();
  Scalar tol = Scalar(1e-5);
  int maxiter = 2000;
  Scalar scale_target = Scalar(2.5e5);
  std::uint64_t seed = 0;
  FactorSource factors = FactorSource::kIterates;
  // Keep the full residual and multiplier-norm traces, not just the last two
  // residuals.
  bool record_trace = false;

  void validate() const {
    if (q < 1) throw Error("q must be >= 1, got " + std::to_string(q));
    if (!(alpha > 0)) throw Error("alpha must be > 0");
    if (!(beta > 0)) throw Error("beta must be > 0");
    if (!(gamma > 0) || !(static_cast<double>(gamma) < kGammaBound * (1 + 1e-12)))
      throw Error("gamma must lie in (0, 1.618), got " +
                  std::to_string(static_cast<double>(gamma)));
    if (!(tol > 0)) throw Error("tol must be > 0");
    if (maxiter < 1) throw Error("maxiter must be >= 1");
    if (!(scale_target > 0)) throw Error("scale_target must be > 0");
  }
};

// Defaults tuned for data rescaled to ||A||_F = 2.5e5:
//   alpha = 2e-4 * ||A||_F * max(m, n) / q,   beta = n * alpha / m.
template <typename Scalar>
SolverParams<Scalar> default_params(const ObservedMatrix<Scalar>& a, Index q) {
  if (!(a.norm() > 0)) throw Error("empty observation: ||A||_F is zero");
  SolverParams<Scalar> p;
  p.q = q;
  const Scalar m = static_cast<Scalar>(a.rows());
  const Scalar n = static_cast<Scalar>(a.cols());
  p.alpha = Scalar(2.0e-4) * p.scale_target * std::max(m, n) /
            static_cast<Scalar>(q);
  p.beta = n * p.alpha / m;
  return p;
}

// Relative residuals f_k. Only the latest two are needed by the stopping
// test; the full trace is optional.
template <typename Scalar>
class ResidualHistory {
 public:
  explicit ResidualHistory(bool keep_trace = false) : keep_trace_(keep_trace) {}

  void push(Scalar f) {
    previous_ = latest_;
    latest_ = f;
    ++count_;
    if (keep_trace_) trace_.push_back(f);
  }

  std::size_t size() const { return count_; }
  Scalar latest() const { return latest_; }
  Scalar previous() const { return previous_; }
  const std::vector<Scalar>& trace() const { return trace_; }

 private:
  bool keep_trace_;
  std::size_t count_ = 0;
  Scalar latest_ = 0;
  Scalar previous_ = 0;
  std::vector<Scalar> trace_;
};

template <typename Scalar>
struct SolverState {
  Matrix<Scalar> X, Y, Z, U, V, Lambda, Pi;
  int k = 0;
  ResidualHistory<Scalar> f;
  // Populated only with SolverParams::record_trace.
  std::vector<Scalar> lambda_norms, pi_norms;
};

template <typename Scalar>
struct Solution {
  Matrix<Scalar> X;  // m x q, data units
  Matrix<Scalar> Y;  // q x n
  int iterations = 0;
  Scalar final_f = 0;
  StopReason stop_reason = StopReason::kMaxIter;
  // Largest |x| among tiny negative factor entries that were zeroed.
  Scalar clamp_magnitude = 0;
  std::vector<Scalar> f_trace;
  std::vector<Scalar> lambda_norms, pi_norms;
  // Final iterate in the rescaled problem, kept for optimality checks.
  std::optional<SolverState<Scalar>> state;
  Scalar scale = 1;
};

// Decides termination from the residual sequence: f_k <= tol first, then
// |f_k - f_{k-1}| / max(1, |f_{k-1}|) <= tol.
template <typename Scalar>
std::optional<StopReason> stopping_met(Scalar latest,
                                       std::optional<Scalar> previous,
                                       Scalar tol) {
  if (latest <= tol) return StopReason::kAbsResidual;
  if (previous &&
      std::abs(latest - *previous) / std::max(Scalar(1), std::abs(*previous)) <=
          tol)
    return StopReason::kRelChange;
  return std::nullopt;
}

template <typename Scalar>
std::optional<StopReason> stopping_met(std::span<const Scalar> f_history,
                                       Scalar tol) {
  if (f_history.empty()) throw Error("stopping test needs a recorded residual");
  std::optional<Scalar> previous;
  if (f_history.size() >= 2) previous = f_history[f_history.size() - 2];
  return stopping_met(f_history.back(), previous, tol);
}

template <typename Scalar>
std::optional<StopReason> stopping_met(const ResidualHistory<Scalar>& history,
                                       Scalar tol) {
  if (history.size() == 0)
    throw Error("stopping test needs a recorded residual");
  std::optional<Scalar> previous;
  if (history.size() >= 2) previous = history.previous();
  return stopping_met(history.latest(), previous, tol);
}

// `a_scaled` is the already-rescaled observation. Y is uniform on [0, 1)
// drawn from params.seed; X is sized but zero until the first X-update.
template <typename Scalar>
SolverState<Scalar> init_state(const ObservedMatrix<Scalar>& a_scaled,
                               const SolverParams<Scalar>& params) {
  params.validate();
  const Index m = a_scaled.rows(), n = a_scaled.cols(), q = params.q;
  SolverState<Scalar> s;
  s.f = ResidualHistory<Scalar>(params.record_trace);
  Rng rng(params.seed);
  s.Y = rng.uniform_matrix<Scalar>(q, n);
  s.X = Matrix<Scalar>::Zero(m, q);
  s.Z = a_scaled.to_dense();
  s.U = Matrix<Scalar>::Zero(m, q);
  s.V = Matrix<Scalar>::Zero(q, n);
  s.Lambda = Matrix<Scalar>::Zero(m, q);
  s.Pi = Matrix<Scalar>::Zero(q, n);
  return s;
}

// X = (Z Y^T + alpha U - Lambda)(Y Y^T + alpha I)^{-1}, via a Cholesky
// factorization of the q x q Gram matrix.
template <typename Scalar>
Matrix<Scalar> update_X(const SolverState<Scalar>& s,
                        const SolverParams<Scalar>& params) {
  const Index q = s.Y.rows();
  Matrix<Scalar> gram = s.Y * s.Y.transpose();
  gram.diagonal().array() += params.alpha;
  Eigen::LLT<Matrix<Scalar>> llt(gram);
  if (llt.info() != Eigen::Success)
    throw Error("X-update: Gram matrix not positive definite (q=" +
                std::to_string(q) + ")");
  Matrix<Scalar> rhs = s.Z * s.Y.transpose();
  rhs.noalias() += params.alpha * s.U - s.Lambda;
  return llt.solve(rhs.transpose()).transpose();
}

// Y = (X^T X + beta I)^{-1}(X^T Z + beta V - Pi), with X already updated and
// Z from the previous sweep.
template <typename Scalar>
Matrix<Scalar> update_Y(const SolverState<Scalar>& s,
                        const SolverParams<Scalar>& params) {
  Matrix<Scalar> gram = s.X.transpose() * s.X;
  gram.diagonal().array() += params.beta;
  Eigen::LLT<Matrix<Scalar>> llt(gram);
  if (llt.info() != Eigen::Success)
    throw Error("Y-update: Gram matrix not positive definite");
  Matrix<Scalar> rhs = s.X.transpose() * s.Z;
  rhs.noalias() += params.beta * s.V - s.Pi;
  return llt.solve(rhs);
}

// Z = XY off the mask and the observed values on it.
template <typename Scalar>
Matrix<Scalar> update_Z(const SolverState<Scalar>& s,
                        const ObservedMatrix<Scalar>& a_scaled) {
  Matrix<Scalar> z = s.X * s.Y;
  a_scaled.scatter_into(z);
  return z;
}

template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> update_UV(
    const SolverState<Scalar>& s, const SolverParams<Scalar>& params) {
  return {project_nonneg(s.X + s.Lambda / params.alpha),
          project_nonneg(s.Y + s.Pi / params.beta)};
}

template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> update_multipliers(
    const SolverState<Scalar>& s, const SolverParams<Scalar>& params) {
  return {s.Lambda + params.gamma * params.alpha * (s.X - s.U),
          s.Pi + params.gamma * params.beta * (s.Y - s.V)};
}

// f = ||P_Omega(XY - A)||_F / ||A||_F.
template <typename Scalar>
Scalar relative_residual(const SolverState<Scalar>& s,
                         const ObservedMatrix<Scalar>& a_scaled) {
  const Scalar norm = a_scaled.norm();
  if (!(norm > 0)) throw Error("empty observation: ||A||_F is zero");
  return masked_misfit(s.X, s.Y, a_scaled) / norm;
}

// One sweep: X, Y, Z, U, V, then Lambda, Pi. Appends f_k.
template <typename Scalar>
void step(SolverState<Scalar>& s, const ObservedMatrix<Scalar>& a_scaled,
          const SolverParams<Scalar>& params) {
  s.X = update_X(s, params);
  s.Y = update_Y(s, params);
  s.Z = update_Z(s, a_scaled);
  auto [u, v] = update_UV(s, params);
  s.U = std::move(u);
  s.V = std::move(v);
  auto [lambda, pi] = update_multipliers(s, params);
  s.Lambda = std::move(lambda);
  s.Pi = std::move(pi);
  ++s.k;
  s.f.push(relative_residual(s, a_scaled));
  if (params.record_trace) {
    s.lambda_norms.push_back(s.Lambda.norm());
    s.pi_norms.push_back(s.Pi.norm());
  }
}

namespace detail {

// Zeroes negatives no larger in magnitude than 1e-12 of the factor's largest
// entry; returns the largest magnitude zeroed.
template <typename Scalar>
Scalar clamp_tiny_negatives(Matrix<Scalar>& m) {
  if (m.size() == 0) return 0;
  const Scalar threshold = Scalar(1e-12) * std::max(Scalar(1e-300), m.cwiseAbs().maxCoeff());
  Scalar clamped = 0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      Scalar& v = m(i, j);
      if (v < 0 && -v <= threshold) {
        clamped = std::max(clamped, -v);
        v = 0;
      }
    }
  return clamped;
}

}  // namespace detail

template <typename Scalar>
Solution<Scalar> solve(const ObservedMatrix<Scalar>& a,
                       const SolverParams<Scalar>& params) {
  params.validate();
  const Scalar norm = a.norm();
  if (!(norm > 0)) throw Error("empty observation: ||A||_F is zero");
  const Scalar scale = params.scale_target / norm;
  const ObservedMatrix<Scalar> a_scaled = a.scaled(scale);

  SolverState<Scalar> s = init_state(a_scaled, params);
  StopReason reason = StopReason::kMaxIter;
  for (int it = 0; it < params.maxiter; ++it) {
    step(s, a_scaled, params);
    if (auto stop = stopping_met(s.f, params.tol)) {
      reason = *stop;
      break;
    }
  }

  Solution<Scalar> out;
  if (params.factors == FactorSource::kSplitting) {
    out.X = s.U / scale;
    out.Y = s.V;
  } else {
    out.X = s.X / scale;
    out.Y = s.Y;
    out.clamp_magnitude = std::max(detail::clamp_tiny_negatives(out.X),
                                   detail::clamp_tiny_negatives(out.Y));
  }
  out.iterations = s.k;
  out.stop_reason = reason;
  out.final_f = masked_misfit(out.X, out.Y, a) / norm;
  out.f_trace = s.f.trace();
  out.lambda_norms = s.lambda_norms;
  out.pi_norms = s.pi_norms;
  out.scale = scale;
  out.state = std::move(s);
  return out;
}

}  // namespace nmfc

#endif  // NMFC_ADMM_HPP_
