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

// Random test instances M = L D R with L, R uniform on [0, 1) and
// D = diag(1, ..., r), plus uniform sampling masks. All randomness comes from
// nmfc::Rng.

#ifndef NMFC_SYNTH_HPP_
#define NMFC_SYNTH_HPP_

#include <cstdint>
#include <utility>

#include "nmfc/matstore.hpp"
#include "nmfc/types.hpp"

namespace nmfc {

struct SyntheticProblem {
  DenseMatrix M;
  DenseMatrix L;  // m x r
  DenseMatrix D;  // r x r diagonal
  DenseMatrix R;  // r x n
  SampleMask mask;
  double sr = 1.0;
  std::uint64_t seed = 0;
};

// Throws unless 1 <= r <= min(m, n). `mask` is left empty.
SyntheticProblem gen_ldr(Index m, Index n, Index r, std::uint64_t seed);

// Exactly round(sr * m * n) distinct positions, uniform without replacement.
SampleMask sample_mask(Index m, Index n, double sr, std::uint64_t seed);

// Seed offset separating the mask stream from the factor stream.
inline constexpr std::uint64_t kMaskSeedOffset = 0x9E3779B97F4A7C15ULL;

std::pair<ObservedMatrix<double>, SyntheticProblem> make_problem(
    Index m, Index n, Index r, double sr, std::uint64_t seed);

}  // namespace nmfc

#endif  // NMFC_SYNTH_HPP_
