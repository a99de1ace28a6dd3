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

// File formats.
//
// Observed entries (coordinate text):
//   % comment lines anywhere
//   m n nnz
//   i j value          (nnz lines, 1-based indices)
//
// Dense CSV: one matrix row per line, comma separated, written with the
// shortest representation that round-trips exactly.
//
// PGM: binary P5, maxval <= 255 one byte per sample, otherwise two bytes
// big-endian.
//
// Hyperspectral cubes: k slices of h x w; slice j becomes column j of an
// (h*w) x k matrix, flattened column-major.
//
// Results: one JSON object per line, plus an optional aligned text table.

#ifndef NMFC_IO_HPP_
#define NMFC_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmfc/matstore.hpp"
#include "nmfc/metrics.hpp"
#include "nmfc/types.hpp"

namespace nmfc::io {

namespace fs = std::filesystem;

ObservedMatrix<double> read_observed(const fs::path& path);
void write_observed(const ObservedMatrix<double>& a, const fs::path& path);

DenseMatrix read_dense_csv(const fs::path& path);
void write_dense_csv(const DenseMatrix& a, const fs::path& path);

struct PgmImage {
  DenseMatrix pixels;  // height x width, values in [0, maxval]
  int maxval = 255;
};

PgmImage read_pgm(const fs::path& path);
// Values are rounded and clamped to [0, max_i]; max_i <= 65535.
void write_pgm(const DenseMatrix& a, int max_i, const fs::path& path);

DenseMatrix cube_to_matrix(std::span<const DenseMatrix> slices);
std::vector<DenseMatrix> matrix_to_cube(const DenseMatrix& m, Index height,
                                        Index width);

struct Cube {
  std::vector<DenseMatrix> slices;
  // Largest PGM maxval among the slices; 0 for CSV slices.
  int maxval = 0;
};

// Reads every *.pgm (or, if none, every *.csv) in `dir`, in filename order.
Cube read_cube_dir(const fs::path& dir);

struct InstanceDescriptor {
  Index m = 0;
  Index n = 0;
  Index q = 0;
  std::optional<Index> r;
  double sr = 1.0;
  std::uint64_t seed = 0;
  friend bool operator==(const InstanceDescriptor&,
                         const InstanceDescriptor&) = default;
};

struct ResultRecord {
  std::string solver;
  InstanceDescriptor instance;
  std::map<std::string, double> params;
  std::optional<EvalReport> eval;
  int iterations = 0;
  std::string stop_reason;
  double final_f = 0;
  double cpu_seconds = 0;
};

bool same_record(const ResultRecord& a, const ResultRecord& b,
                 bool ignore_timing);

std::string to_json_line(const ResultRecord& record, bool include_timing = true);
ResultRecord from_json_line(const std::string& line);

std::string format_table(std::span<const ResultRecord> records);

// Writes newline-delimited JSON to `path` and, if given, the aligned table.
void write_results(std::span<const ResultRecord> records, const fs::path& path,
                   const std::optional<fs::path>& table_path = std::nullopt);
std::vector<ResultRecord> read_results(const fs::path& path);

// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace nmfc::io

#endif  // NMFC_IO_HPP_
