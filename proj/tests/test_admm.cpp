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

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/LU>
#include <doctest.h>

#include "nmfc/admm.hpp"
#include "nmfc/synth.hpp"
#include "test_support.hpp"

using nmfc::DenseMatrix;
using nmfc::FactorSource;
using nmfc::ObservedMatrix;
using nmfc::SampleMask;
using nmfc::SolverParams;
using nmfc::SolverState;
using nmfc::StopReason;
using nmfc::testing::random_mask;
using nmfc::testing::random_matrix;

namespace {

// Solves X * G = B for X by writing the system in vectorized form,
// vec(X G) = (G^T kron I) vec(X), and running a full-pivot LU on it.
DenseMatrix right_solve_oracle(const DenseMatrix& g, const DenseMatrix& b) {
  const nmfc::Index m = b.rows(), q = g.rows();
  DenseMatrix big = DenseMatrix::Zero(m * q, m * q);
  for (nmfc::Index a = 0; a < q; ++a)
    for (nmfc::Index c = 0; c < q; ++c)
      for (nmfc::Index i = 0; i < m; ++i) big(c * m + i, a * m + i) = g(a, c);
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  Eigen::VectorXd sol = big.fullPivLu().solve(rhs);
  return Eigen::Map<DenseMatrix>(sol.data(), m, q);
}

SolverState<double> random_state(nmfc::Rng& rng, nmfc::Index m, nmfc::Index n,
                                 nmfc::Index q) {
  SolverState<double> s;
  s.X = random_matrix(rng, m, q);
  s.Y = random_matrix(rng, q, n);
  s.Z = random_matrix(rng, m, n, 0, 2);
  s.U = random_matrix(rng, m, q, 0, 1);
  s.V = random_matrix(rng, q, n, 0, 1);
  s.Lambda = random_matrix(rng, m, q);
  s.Pi = random_matrix(rng, q, n);
  return s;
}

SolverParams<double> unit_params(nmfc::Index q) {
  SolverParams<double> p;
  p.q = q;
  p.alpha = 1;
  p.beta = 1;
  return p;
}

ObservedMatrix<double> exact_nmf(nmfc::Index m, nmfc::Index n, nmfc::Index q,
                                 std::uint64_t seed, const SampleMask& mask) {
  nmfc::Rng rng(seed);
  const DenseMatrix x0 = rng.uniform_matrix<double>(m, q);
  const DenseMatrix y0 = rng.uniform_matrix<double>(q, n);
  return ObservedMatrix<double>::sample(DenseMatrix(x0 * y0), mask);
}

}  // namespace

TEST_CASE("default_params follows the scaled-norm heuristic") {
  const auto square = ObservedMatrix<double>::sample(
      DenseMatrix::Ones(500, 500), SampleMask::full(500, 500));
  const auto p = nmfc::default_params(square, 20);
  CHECK(p.alpha == doctest::Approx(1250));
  CHECK(p.beta == doctest::Approx(1250));
  CHECK(p.tol == 1e-5);
  CHECK(p.maxiter == 2000);
  CHECK(p.scale_target == 2.5e5);
  CHECK(p.gamma < 1.618);
  CHECK(SolverParams<float>{}.gamma < 1.618f);
  CHECK_NOTHROW(SolverParams<float>{}.validate());
  CHECK(p.gamma == doctest::Approx(1.618).epsilon(1e-11));

  const auto wide = ObservedMatrix<double>::sample(
      DenseMatrix::Constant(100, 200, 3.0), SampleMask::full(100, 200));
  const auto pw = nmfc::default_params(wide, 10);
  CHECK(pw.alpha == doctest::Approx(1000));
  CHECK(pw.beta == doctest::Approx(2000));

  const auto zero = ObservedMatrix<double>::sample(DenseMatrix::Zero(2, 2),
                                                   SampleMask::full(2, 2));
  CHECK_THROWS_WITH_AS(nmfc::default_params(zero, 1),
                       doctest::Contains("empty observation"), nmfc::Error);
}

TEST_CASE("SolverParams validation") {
  SolverParams<double> p = unit_params(2);
  CHECK_NOTHROW(p.validate());
  p.gamma = 1.618;
  CHECK_NOTHROW(p.validate());
  p.gamma = 1.618 * (1 + 1e-12);
  CHECK_THROWS_AS(p.validate(), nmfc::Error);
  p.gamma = 0;
  CHECK_THROWS_AS(p.validate(), nmfc::Error);
  p = unit_params(0);
  CHECK_THROWS_AS(p.validate(), nmfc::Error);
  p = unit_params(1);
  p.alpha = 0;
  CHECK_THROWS_AS(p.validate(), nmfc::Error);
  p = unit_params(1);
  p.tol = 0;
  CHECK_THROWS_AS(p.validate(), nmfc::Error);
  p = unit_params(1);
  p.maxiter = 0;
  CHECK_THROWS_AS(p.validate(), nmfc::Error);
}

TEST_CASE("init_state") {
  nmfc::Rng rng(3);
  const SampleMask mask = random_mask(rng, 6, 5, 0.5);
  const auto a = exact_nmf(6, 5, 2, 11, mask);
  SolverParams<double> p = unit_params(2);
  p.seed = 42;
  const auto s1 = nmfc::init_state(a, p);
  const auto s2 = nmfc::init_state(a, p);
  CHECK(s1.Y == s2.Y);
  CHECK(s1.Y.minCoeff() >= 0);
  CHECK(s1.Y.maxCoeff() < 1);
  CHECK(nmfc::project_mask_complement(s1.Z, mask) == DenseMatrix::Zero(6, 5));
  CHECK(nmfc::project_mask(s1.Z, mask) == a.to_dense());
  CHECK(s1.U.isZero(0));
  CHECK(s1.V.isZero(0));
  CHECK(s1.Lambda.isZero(0));
  CHECK(s1.Pi.isZero(0));
  CHECK(s1.k == 0);
  CHECK(s1.f.size() == 0);
}

TEST_CASE("update_X and update_Y scalar examples") {
  SolverState<double> s;
  s.Y = DenseMatrix::Ones(1, 2);
  s.Z.resize(2, 2);
  s.Z << 1, 1, 2, 2;
  s.U = DenseMatrix::Zero(2, 1);
  s.Lambda = DenseMatrix::Zero(2, 1);
  const DenseMatrix x = nmfc::update_X(s, unit_params(1));
  const DenseMatrix x_oracle = right_solve_oracle(
      DenseMatrix(s.Y * s.Y.transpose() + DenseMatrix::Identity(1, 1)),
      DenseMatrix(s.Z * s.Y.transpose()));
  CHECK(x(0, 0) == doctest::Approx(2.0 / 3));
  CHECK(x(1, 0) == doctest::Approx(4.0 / 3));
  CHECK((x - x_oracle).norm() <= 1e-14);

  SolverState<double> t;
  t.X = DenseMatrix::Ones(2, 1);
  t.Z.resize(2, 2);
  t.Z << 1, 2, 1, 2;
  t.V = DenseMatrix::Zero(1, 2);
  t.Pi = DenseMatrix::Zero(1, 2);
  const DenseMatrix y = nmfc::update_Y(t, unit_params(1));
  CHECK(y(0, 0) == doctest::Approx(2.0 / 3));
  CHECK(y(0, 1) == doctest::Approx(4.0 / 3));
}

TEST_CASE("update_X and update_Y collapse when the other factor is zero") {
  nmfc::Rng rng(5);
  SolverState<double> s = random_state(rng, 4, 3, 2);
  SolverParams<double> p = unit_params(2);
  p.alpha = 2.5;
  p.beta = 0.5;
  s.Y.setZero();
  CHECK((nmfc::update_X(s, p) - (s.U - s.Lambda / p.alpha)).norm() <= 1e-14);
  s.Y = random_matrix(rng, 2, 3);
  s.X.setZero();
  CHECK((nmfc::update_Y(s, p) - (s.V - s.Pi / p.beta)).norm() <= 1e-14);
}

TEST_CASE("update_X and update_Y match a dense oracle on random states") {
  nmfc::Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    SolverState<double> s = random_state(rng, 7, 5, 3);
    SolverParams<double> p = unit_params(3);
    p.alpha = 0.1 + 3 * rng.uniform01();
    p.beta = 0.1 + 3 * rng.uniform01();

    const DenseMatrix x = nmfc::update_X(s, p);
    const DenseMatrix gx =
        s.Y * s.Y.transpose() + p.alpha * DenseMatrix::Identity(3, 3);
    const DenseMatrix bx = s.Z * s.Y.transpose() + p.alpha * s.U - s.Lambda;
    CHECK((x * gx - bx).norm() <= 1e-10 * (1 + bx.norm()));
    CHECK(nmfc::testing::relative_diff(x, right_solve_oracle(gx, bx)) <= 1e-10);

    s.X = x;
    const DenseMatrix y = nmfc::update_Y(s, p);
    const DenseMatrix gy =
        s.X.transpose() * s.X + p.beta * DenseMatrix::Identity(3, 3);
    const DenseMatrix by = s.X.transpose() * s.Z + p.beta * s.V - s.Pi;
    CHECK((gy * y - by).norm() <= 1e-10 * (1 + by.norm()));
    // Transposing turns the left solve into a right solve.
    const DenseMatrix yt = right_solve_oracle(gy.transpose(), by.transpose());
    CHECK(nmfc::testing::relative_diff(y, yt.transpose()) <= 1e-10);
  }
}

TEST_CASE("update_Z keeps observations and fills the rest from XY") {
  nmfc::Rng rng(9);
  for (double keep : {0.0, 0.4, 1.0}) {
    const SampleMask mask = random_mask(rng, 5, 6, keep);
    const auto a = ObservedMatrix<double>::sample(random_matrix(rng, 5, 6, 0, 1), mask);
    SolverState<double> s = random_state(rng, 5, 6, 2);
    const DenseMatrix z = nmfc::update_Z(s, a);
    const DenseMatrix xy = s.X * s.Y;
    CHECK(nmfc::project_mask(z, mask) == a.to_dense());
    CHECK(nmfc::project_mask_complement(z, mask) ==
          nmfc::project_mask_complement(xy, mask));
  }
}

TEST_CASE("update_UV examples") {
  SolverParams<double> p = unit_params(1);
  p.alpha = 2;
  SolverState<double> s;
  s.X = DenseMatrix::Constant(1, 1, -1);
  s.Lambda = DenseMatrix::Constant(1, 1, -2);
  s.Y = DenseMatrix::Constant(1, 3, 0);
  s.Y << -1, 0.5, 2;
  s.Pi = DenseMatrix::Zero(1, 3);
  auto [u, v] = nmfc::update_UV(s, p);
  CHECK(u(0, 0) == 0);
  DenseMatrix v_expected(1, 3);
  v_expected << 0, 0.5, 2;
  CHECK(v == v_expected);

  s.X = DenseMatrix::Constant(1, 1, 0.75);
  s.Lambda.setZero();
  auto [u2, v2] = nmfc::update_UV(s, p);
  CHECK(u2 == s.X);
}

TEST_CASE("update_multipliers examples") {
  SolverParams<double> p = unit_params(1);
  p.alpha = 2;
  p.gamma = 1;
  SolverState<double> s;
  s.X = DenseMatrix::Constant(1, 1, 3);
  s.U = DenseMatrix::Constant(1, 1, 2);
  s.Lambda = DenseMatrix::Zero(1, 1);
  s.Y = DenseMatrix::Constant(1, 1, 1);
  s.V = s.Y;
  s.Pi = DenseMatrix::Constant(1, 1, -0.25);
  auto [lambda, pi] = nmfc::update_multipliers(s, p);
  CHECK(lambda(0, 0) == 2);
  CHECK(pi == s.Pi);

  // With zero multipliers the projection pushes U above X, so the new
  // multipliers are nonpositive.
  nmfc::Rng rng(23);
  SolverParams<double> q = unit_params(3);
  for (int trial = 0; trial < 20; ++trial) {
    SolverState<double> t = random_state(rng, 6, 4, 3);
    t.Lambda.setZero();
    t.Pi.setZero();
    std::tie(t.U, t.V) = nmfc::update_UV(t, q);
    auto [l, pp] = nmfc::update_multipliers(t, q);
    CHECK(l.maxCoeff() <= 0);
    CHECK(pp.maxCoeff() <= 0);
  }
}

TEST_CASE("relative_residual examples") {
  DenseMatrix row(1, 2);
  row << 3, 4;
  const auto a = ObservedMatrix<double>::sample(row, SampleMask::full(1, 2));
  SolverState<double> s;
  s.X = DenseMatrix::Zero(1, 1);
  s.Y = DenseMatrix::Ones(1, 2);
  CHECK(nmfc::relative_residual(s, a) == doctest::Approx(1.0));
  s.X(0, 0) = 1;
  s.Y << 3, 0;
  CHECK(nmfc::relative_residual(s, a) == doctest::Approx(0.8));
  s.Y << 3, 4;
  CHECK(nmfc::relative_residual(s, a) == 0);
}

TEST_CASE("stopping_met examples") {
  const std::vector<double> rel = {0.5, 0.5 + 1e-9};
  const std::vector<double> abs = {1e-6};
  const std::vector<double> none = {0.9, 0.5};
  const std::vector<double> single = {0.5};
  CHECK(nmfc::stopping_met<double>(rel, 1e-5) == StopReason::kRelChange);
  CHECK(nmfc::stopping_met<double>(abs, 1e-5) == StopReason::kAbsResidual);
  CHECK_FALSE(nmfc::stopping_met<double>(none, 1e-5).has_value());
  CHECK_FALSE(nmfc::stopping_met<double>(single, 1e-5).has_value());
  // Both rules hold: the absolute one wins.
  const std::vector<double> both = {1e-7, 1e-7};
  CHECK(nmfc::stopping_met<double>(both, 1e-5) == StopReason::kAbsResidual);
  CHECK_THROWS_AS(nmfc::stopping_met<double>(std::vector<double>{}, 1e-5),
                  nmfc::Error);
  // Large residuals use the relative denominator.
  const std::vector<double> big = {100, 100 + 5e-4};
  CHECK(nmfc::stopping_met<double>(big, 1e-5) == StopReason::kRelChange);
}

TEST_CASE("stop reason names round-trip") {
  for (StopReason r : {StopReason::kRelChange, StopReason::kAbsResidual,
                       StopReason::kMaxIter})
    CHECK(nmfc::stop_reason_from_string(nmfc::to_string(r)) == r);
  CHECK_THROWS_AS(nmfc::stop_reason_from_string("sideways"), nmfc::Error);
}

TEST_CASE("step is deterministic and preserves feasibility") {
  nmfc::Rng rng(31);
  const SampleMask mask = random_mask(rng, 12, 10, 0.6);
  const auto a = exact_nmf(12, 10, 3, 5, mask);
  auto p = nmfc::default_params(a, 3);
  p.seed = 8;
  const auto a_scaled = a.scaled(p.scale_target / a.norm());
  auto s1 = nmfc::init_state(a_scaled, p);
  auto s2 = nmfc::init_state(a_scaled, p);
  for (int k = 0; k < 10; ++k) {
    nmfc::step(s1, a_scaled, p);
    nmfc::step(s2, a_scaled, p);
    CHECK(nmfc::project_mask(s1.Z, mask) == a_scaled.to_dense());
    CHECK(s1.U.minCoeff() >= 0);
    CHECK(s1.V.minCoeff() >= 0);
  }
  CHECK(s1.k == 10);
  CHECK(s1.f.size() == 10);
  CHECK(s1.X == s2.X);
  CHECK(s1.Y == s2.Y);
  CHECK(s1.Z == s2.Z);
  CHECK(s1.Lambda == s2.Lambda);
  CHECK(s1.Pi == s2.Pi);
}

TEST_CASE("step leaves a fixed point unchanged") {
  nmfc::Rng rng(41);
  const nmfc::Index m = 6, n = 5, q = 2;
  const DenseMatrix x0 = random_matrix(rng, m, q, 0.5, 1);
  const DenseMatrix y0 = random_matrix(rng, q, n, 0.5, 1);
  const DenseMatrix m0 = x0 * y0;
  const auto a = ObservedMatrix<double>::sample(m0, SampleMask::full(m, n));
  SolverState<double> s;
  s.X = x0;
  s.Y = y0;
  s.Z = m0;
  s.U = x0;
  s.V = y0;
  s.Lambda = DenseMatrix::Zero(m, q);
  s.Pi = DenseMatrix::Zero(q, n);
  const SolverParams<double> p = unit_params(q);
  nmfc::step(s, a, p);
  CHECK(nmfc::testing::relative_diff(s.X, x0) <= 1e-12);
  CHECK(nmfc::testing::relative_diff(s.Y, y0) <= 1e-12);
  CHECK(s.Lambda.norm() <= 1e-12);
  CHECK(s.Pi.norm() <= 1e-12);
  CHECK(s.f.latest() <= 1e-12);
}

TEST_CASE("solve recovers an exact nonnegative factorization") {
  const auto a = exact_nmf(50, 50, 5, 1, SampleMask::full(50, 50));
  const auto p = nmfc::default_params(a, 5);
  const auto sol = nmfc::solve(a, p);
  CHECK(sol.final_f <= 1e-2);
  CHECK(sol.iterations <= 2000);
  CHECK(sol.stop_reason != StopReason::kMaxIter);
  CHECK(sol.X.rows() == 50);
  CHECK(sol.Y.cols() == 50);
  CHECK(sol.scale == doctest::Approx(2.5e5 / a.norm()));
  const DenseMatrix full = a.to_dense();
  CHECK((sol.X * sol.Y - full).norm() / full.norm() ==
        doctest::Approx(sol.final_f));
}

TEST_CASE("converged iterates are nonnegative and match the splitting") {
  const auto a = exact_nmf(50, 50, 5, 1, SampleMask::full(50, 50));
  auto p = nmfc::default_params(a, 5);
  p.tol = 1e-10;
  p.maxiter = 5000;
  const auto sol = nmfc::solve(a, p);
  REQUIRE(sol.stop_reason != StopReason::kMaxIter);
  CHECK(sol.X.minCoeff() >= 0);
  CHECK(sol.Y.minCoeff() >= 0);
  CHECK(sol.final_f <= 1e-6);
  p.factors = FactorSource::kSplitting;
  const auto split = nmfc::solve(a, p);
  CHECK(split.final_f <= 1e-6);
}

TEST_CASE("solve honours maxiter") {
  const auto a = exact_nmf(10, 8, 2, 3, SampleMask::full(10, 8));
  auto p = nmfc::default_params(a, 2);
  p.maxiter = 1;
  const auto sol = nmfc::solve(a, p);
  CHECK(sol.iterations == 1);
  CHECK(sol.stop_reason == StopReason::kMaxIter);
}

TEST_CASE("solve with splitting factors is exactly nonnegative") {
  nmfc::Rng rng(2);
  const auto a = exact_nmf(20, 15, 3, 7, random_mask(rng, 20, 15, 0.7));
  auto p = nmfc::default_params(a, 3);
  p.factors = FactorSource::kSplitting;
  p.maxiter = 40;
  const auto sol = nmfc::solve(a, p);
  CHECK(sol.X.minCoeff() >= 0);
  CHECK(sol.Y.minCoeff() >= 0);
  CHECK(sol.clamp_magnitude == 0);
}

TEST_CASE("solve is consistent under scaling of the data") {
  nmfc::Rng rng(12);
  const SampleMask mask = random_mask(rng, 15, 12, 0.7);
  const auto a = exact_nmf(15, 12, 3, 4, mask);
  auto p = nmfc::default_params(a, 3);
  p.maxiter = 30;
  const auto base = nmfc::solve(a, p);
  const DenseMatrix xy = base.X * base.Y;
  for (double c : {2.0, 3.0}) {
    const auto ca = ObservedMatrix<double>(mask, c * a.values());
    auto pc = nmfc::default_params(ca, 3);
    pc.maxiter = p.maxiter;
    const auto sol = nmfc::solve(ca, pc);
    CHECK(sol.iterations == base.iterations);
    const DenseMatrix cxy = sol.X * sol.Y;
    CHECK(nmfc::testing::relative_diff(cxy, DenseMatrix(c * xy)) <= 1e-8);
  }
}

TEST_CASE("solve records traces on request") {
  const auto a = exact_nmf(10, 10, 2, 9, SampleMask::full(10, 10));
  auto p = nmfc::default_params(a, 2);
  p.maxiter = 15;
  p.tol = 1e-14;
  p.record_trace = true;
  const auto sol = nmfc::solve(a, p);
  CHECK(sol.f_trace.size() == static_cast<std::size_t>(sol.iterations));
  CHECK(sol.lambda_norms.size() == sol.f_trace.size());
  CHECK(sol.pi_norms.size() == sol.f_trace.size());
  p.record_trace = false;
  CHECK(nmfc::solve(a, p).f_trace.empty());
}

TEST_CASE("solve works in single precision") {
  nmfc::Rng rng(4);
  const DenseMatrix x0 = rng.uniform_matrix<double>(20, 3);
  const DenseMatrix y0 = rng.uniform_matrix<double>(3, 20);
  const Eigen::MatrixXf m0 = (x0 * y0).cast<float>();
  const auto a = ObservedMatrix<float>::sample(m0, SampleMask::full(20, 20));
  const auto sol = nmfc::solve(a, nmfc::default_params(a, 3));
  CHECK(sol.final_f <= 2e-2f);
}

TEST_CASE("clamp_tiny_negatives only touches negligible negatives") {
  DenseMatrix m(1, 4);
  m << 1, -1e-13, -1e-3, 0.5;
  const double c = nmfc::detail::clamp_tiny_negatives(m);
  CHECK(c == 1e-13);
  CHECK(m(0, 1) == 0);
  CHECK(m(0, 2) == -1e-3);
}
