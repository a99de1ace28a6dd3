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

#include "nmfc/synth.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace nmfc {

SyntheticProblem gen_ldr(Index m, Index n, Index r, std::uint64_t seed) {
  if (m < 1 || n < 1 || r < 1 || r > std::min(m, n))
    throw Error("rank r=" + std::to_string(r) + " outside [1, min(m, n)] for " +
                shape_string(m, n));
  Rng rng(seed);
  SyntheticProblem p;
  p.seed = seed;
  p.L = rng.uniform_matrix<double>(m, r);
  p.R = rng.uniform_matrix<double>(r, n);
  p.D = DenseMatrix::Zero(r, r);
  for (Index i = 0; i < r; ++i) p.D(i, i) = static_cast<double>(i + 1);
  p.M = p.L * p.D * p.R;
  p.mask = SampleMask::empty(m, n);
  return p;
}

SampleMask sample_mask(Index m, Index n, double sr, std::uint64_t seed) {
  if (!(sr > 0.0 && sr <= 1.0))
    throw Error("sample rate must lie in (0, 1], got " + std::to_string(sr));
  const std::uint64_t total = static_cast<std::uint64_t>(m) *
                              static_cast<std::uint64_t>(n);
  const auto count = static_cast<std::uint64_t>(
      std::llround(sr * static_cast<double>(total)));
  std::vector<std::uint64_t> linear(total);
  std::iota(linear.begin(), linear.end(), std::uint64_t{0});
  // Partial Fisher-Yates: the first `count` slots become the sample.
  Rng rng(seed);
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint64_t pick = k + rng.below(total - k);
    std::swap(linear[k], linear[pick]);
  }
  std::vector<SampleMask::Entry> entries;
  entries.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k)
    entries.push_back({static_cast<Index>(linear[k] / n),
                       static_cast<Index>(linear[k] % n)});
  return SampleMask(m, n, std::move(entries));
}

std::pair<ObservedMatrix<double>, SyntheticProblem> make_problem(
    Index m, Index n, Index r, double sr, std::uint64_t seed) {
  SyntheticProblem p = gen_ldr(m, n, r, seed);
  p.sr = sr;
  p.mask = sample_mask(m, n, sr, seed + kMaskSeedOffset);
  auto observed = ObservedMatrix<double>::sample(p.M, p.mask);
  return {std::move(observed), std::move(p)};
}

}  // namespace nmfc
