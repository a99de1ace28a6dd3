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

// Dense storage helpers, the sampling mask and the two projections used by
// every solver: the mask projection (keep observed entries, zero the rest)
// and the nonnegative-orthant projection.

#ifndef NMFC_MATSTORE_HPP_
#define NMFC_MATSTORE_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nmfc/types.hpp"

namespace nmfc {

// Set of observed (row, col) positions, zero-based, kept sorted and unique.
class SampleMask {
 public:
  struct Entry {
    Index row = 0;
    Index col = 0;
    friend auto operator<=>(const Entry&, const Entry&) = default;
  };

  SampleMask() = default;

  // Sorts `entries`; throws on an out-of-range or repeated position.
  SampleMask(Index rows, Index cols, std::vector<Entry> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows < 0 || cols < 0)
      throw Error("mask bounds must be nonnegative, got " +
                  shape_string(rows, cols));
    std::sort(entries_.begin(), entries_.end());
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const Entry& e = entries_[k];
      if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
        throw Error("mask entry (" + std::to_string(e.row) + ", " +
                    std::to_string(e.col) + ") outside " +
                    shape_string(rows, cols));
      if (k > 0 && entries_[k - 1] == e)
        throw Error("duplicate mask entry (" + std::to_string(e.row) + ", " +
                    std::to_string(e.col) + ")");
    }
  }

  static SampleMask full(Index rows, Index cols) {
    std::vector<Entry> all;
    all.reserve(static_cast<std::size_t>(rows * cols));
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) all.push_back({i, j});
    return SampleMask(rows, cols, std::move(all));
  }

  static SampleMask empty(Index rows, Index cols) {
    return SampleMask(rows, cols, {});
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  std::size_t size() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }

  double sample_rate() const {
    const double total = static_cast<double>(rows_) * static_cast<double>(cols_);
    return total > 0 ? static_cast<double>(entries_.size()) / total : 0.0;
  }

  bool contains(Index row, Index col) const {
    return std::binary_search(entries_.begin(), entries_.end(), Entry{row, col});
  }

  friend bool operator==(const SampleMask&, const SampleMask&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Entry> entries_;
};

template <typename Derived>
void check_mask_shape(const Eigen::MatrixBase<Derived>& a,
                      const SampleMask& mask) {
  if (a.rows() != mask.rows() || a.cols() != mask.cols())
    throw Error("dimension mismatch: matrix is " +
                shape_string(a.rows(), a.cols()) + " but mask is " +
                shape_string(mask.rows(), mask.cols()));
}

// Copy of `a` with every entry outside the mask set to zero.
template <typename Derived>
typename Derived::PlainObject project_mask(const Eigen::MatrixBase<Derived>& a,
                                           const SampleMask& mask) {
  check_mask_shape(a, mask);
  typename Derived::PlainObject out =
      Derived::PlainObject::Zero(a.rows(), a.cols());
  for (const auto& e : mask.entries()) out(e.row, e.col) = a(e.row, e.col);
  return out;
}

// Copy of `a` with every observed entry set to zero.
template <typename Derived>
typename Derived::PlainObject project_mask_complement(
    const Eigen::MatrixBase<Derived>& a, const SampleMask& mask) {
  check_mask_shape(a, mask);
  typename Derived::PlainObject out = a;
  for (const auto& e : mask.entries()) out(e.row, e.col) = 0;
  return out;
}

template <typename Derived>
typename Derived::PlainObject project_nonneg(
    const Eigen::MatrixBase<Derived>& a) {
  return a.cwiseMax(typename Derived::Scalar(0));
}

template <typename Derived>
typename Derived::Scalar frob_norm(const Eigen::MatrixBase<Derived>& a) {
  return a.norm();
}

// The input A = P_Omega(M): a mask plus the observed values, aligned with
// mask.entries().
template <typename Scalar>
class ObservedMatrix {
 public:
  struct Triplet {
    Index row;
    Index col;
    Scalar value;
  };

  ObservedMatrix() = default;

  ObservedMatrix(SampleMask mask, Vector<Scalar> values)
      : mask_(std::move(mask)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != mask_.size())
      throw Error("observed value count " + std::to_string(values_.size()) +
                  " does not match mask size " + std::to_string(mask_.size()));
    if (!values_.allFinite()) throw Error("observed values must be finite");
    if (values_.size() > 0 && values_.minCoeff() < Scalar(0))
      warn("observed matrix has negative entries (min " +
           std::to_string(static_cast<double>(values_.minCoeff())) +
           "); nonnegative factors cannot fit them exactly");
  }

  // Accepts triplets in any order; duplicates are rejected by SampleMask.
  static ObservedMatrix from_triplets(Index rows, Index cols,
                                     std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) {
                return std::pair(a.row, a.col) < std::pair(b.row, b.col);
              });
    std::vector<SampleMask::Entry> entries;
    entries.reserve(triplets.size());
    Vector<Scalar> values(static_cast<Index>(triplets.size()));
    for (std::size_t k = 0; k < triplets.size(); ++k) {
      entries.push_back({triplets[k].row, triplets[k].col});
      values(static_cast<Index>(k)) = triplets[k].value;
    }
    return ObservedMatrix(SampleMask(rows, cols, std::move(entries)),
                          std::move(values));
  }

  template <typename Derived>
  static ObservedMatrix sample(const Eigen::MatrixBase<Derived>& full,
                               SampleMask mask) {
    check_mask_shape(full, mask);
    Vector<Scalar> values(static_cast<Index>(mask.size()));
    Index k = 0;
    for (const auto& e : mask.entries())
      values(k++) = static_cast<Scalar>(full(e.row, e.col));
    return ObservedMatrix(std::move(mask), std::move(values));
  }

  Index rows() const { return mask_.rows(); }
  Index cols() const { return mask_.cols(); }
  const SampleMask& mask() const { return mask_; }
  const Vector<Scalar>& values() const { return values_; }
  Scalar norm() const { return values_.norm(); }

  // Dense m x n embedding with zeros off the mask.
  Matrix<Scalar> to_dense() const {
    Matrix<Scalar> out = Matrix<Scalar>::Zero(rows(), cols());
    scatter_into(out);
    return out;
  }

  // Overwrites the observed positions of `target` with the observed values.
  template <typename Derived>
  void scatter_into(Eigen::MatrixBase<Derived>& target) const {
    check_mask_shape(target, mask_);
    Index k = 0;
    for (const auto& e : mask_.entries()) target(e.row, e.col) = values_(k++);
  }

  ObservedMatrix scaled(Scalar factor) const {
    ObservedMatrix out;
    out.mask_ = mask_;
    out.values_ = values_ * factor;
    return out;
  }

  friend bool operator==(const ObservedMatrix& a, const ObservedMatrix& b) {
    return a.mask_ == b.mask_ && a.values_ == b.values_;
  }

 private:
  SampleMask mask_;
  Vector<Scalar> values_;
};

// ||P_Omega(product - A)||_F computed entrywise from the factors, O(|Omega| q).
template <typename Scalar>
Scalar masked_misfit(const Matrix<Scalar>& x, const Matrix<Scalar>& y,
                     const ObservedMatrix<Scalar>& a) {
  Scalar sum = 0;
  Index k = 0;
  for (const auto& e : a.mask().entries()) {
    const Scalar r = x.row(e.row).dot(y.col(e.col)) - a.values()(k++);
    sum += r * r;
  }
  return std::sqrt(sum);
}

}  // namespace nmfc

#endif  // NMFC_MATSTORE_HPP_
