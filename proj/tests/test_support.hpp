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

// Shared helpers for the unit tests: seeded random generators for
// property-style checks and a scratch directory.

#ifndef NMFC_TESTS_TEST_SUPPORT_HPP_
#define NMFC_TESTS_TEST_SUPPORT_HPP_

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nmfc/matstore.hpp"
#include "nmfc/types.hpp"

namespace nmfc::testing {

// Entries uniform on [lo, hi).
inline DenseMatrix random_matrix(Rng& rng, Index rows, Index cols,
                                 double lo = -1.0, double hi = 1.0) {
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = lo + (hi - lo) * rng.uniform01();
  return m;
}

// Each position kept independently with probability `keep`.
inline SampleMask random_mask(Rng& rng, Index rows, Index cols, double keep) {
  std::vector<SampleMask::Entry> entries;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (rng.uniform01() < keep) entries.push_back({i, j});
  return SampleMask(rows, cols, std::move(entries));
}

inline double relative_diff(const DenseMatrix& a, const DenseMatrix& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("nmfc_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace nmfc::testing

#endif  // NMFC_TESTS_TEST_SUPPORT_HPP_
