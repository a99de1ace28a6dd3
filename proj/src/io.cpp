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

#include "nmfc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string_view>

#include <json.hpp>

namespace nmfc::io {

namespace {

using json = nlohmann::json;

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < s.size()) {
    pos = s.find_first_not_of(" \t\r\n", pos);
    if (pos == std::string_view::npos) break;
    const auto end = s.find_first_of(" \t\r\n", pos);
    tokens.push_back(s.substr(pos, end == std::string_view::npos ? end : end - pos));
    pos = end;
  }
  return tokens;
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void parse_error(const fs::path& path, std::size_t line,
                              const std::string& what) {
  throw Error(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

ObservedMatrix<double> read_observed(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  long long m = 0, n = 0, nnz = 0;
  std::vector<ObservedMatrix<double>::Triplet> triplets;
  std::map<std::pair<Index, Index>, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '%') continue;
    const auto tokens = split_ws(body);
    if (!have_header) {
      if (tokens.size() != 3 || !parse_number(tokens[0], m) ||
          !parse_number(tokens[1], n) || !parse_number(tokens[2], nnz))
        parse_error(path, line_no, "expected header 'm n nnz'");
      if (m < 1 || n < 1 || nnz < 0 || nnz > m * n)
        parse_error(path, line_no, "invalid header values");
      have_header = true;
      triplets.reserve(static_cast<std::size_t>(nnz));
      continue;
    }
    long long i = 0, j = 0;
    double v = 0;
    if (tokens.size() != 3 || !parse_number(tokens[0], i) ||
        !parse_number(tokens[1], j) || !parse_number(tokens[2], v))
      parse_error(path, line_no, "expected 'i j value'");
    if (i < 1 || i > m || j < 1 || j > n)
      parse_error(path, line_no,
                  "index (" + std::to_string(i) + ", " + std::to_string(j) +
                      ") out of bounds for " + shape_string(m, n));
    if (!std::isfinite(v)) parse_error(path, line_no, "non-finite value");
    const auto key = std::pair<Index, Index>(i - 1, j - 1);
    if (auto it = seen.find(key); it != seen.end())
      parse_error(path, line_no,
                  "duplicate entry (" + std::to_string(i) + ", " +
                      std::to_string(j) + "), first seen on line " +
                      std::to_string(it->second));
    seen.emplace(key, line_no);
    triplets.push_back({i - 1, j - 1, v});
  }
  if (!have_header) parse_error(path, line_no, "missing header");
  if (static_cast<long long>(triplets.size()) != nnz)
    parse_error(path, line_no,
                "header declares " + std::to_string(nnz) + " entries, found " +
                    std::to_string(triplets.size()));
  return ObservedMatrix<double>::from_triplets(m, n, std::move(triplets));
}

void write_observed(const ObservedMatrix<double>& a, const fs::path& path) {
  auto out = open_out(path);
  out << a.rows() << ' ' << a.cols() << ' ' << a.mask().size() << '\n';
  Index k = 0;
  for (const auto& e : a.mask().entries())
    out << e.row + 1 << ' ' << e.col + 1 << ' ' << format_double(a.values()(k++))
        << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

DenseMatrix read_dense_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const auto comma = body.find(',', pos);
      const auto token = trim(body.substr(pos, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - pos));
      double v = 0;
      if (!parse_number(token, v) || !std::isfinite(v))
        parse_error(path, line_no,
                    "row " + std::to_string(rows.size()) +
                        ": non-numeric token '" + std::string(token) + "'");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      parse_error(path, line_no,
                  "ragged row " + std::to_string(rows.size()) + ": " +
                      std::to_string(row.size()) + " columns, expected " +
                      std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(path.string() + ": empty matrix");
  DenseMatrix out(static_cast<Index>(rows.size()),
                  static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j)
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

void write_dense_csv(const DenseMatrix& a, const fs::path& path) {
  auto out = open_out(path);
  std::string line;
  for (Index i = 0; i < a.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) line += ',';
      line += format_double(a(i, j));
    }
    out << line << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in, const fs::path& path) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  if (token.empty()) throw Error(path.string() + ": malformed PGM header");
  return token;
}

}  // namespace

PgmImage read_pgm(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  if (pgm_token(in, path) != "P5")
    throw Error(path.string() + ": not a binary PGM (P5)");
  long long width = 0, height = 0, maxval = 0;
  if (!parse_number(pgm_token(in, path), width) ||
      !parse_number(pgm_token(in, path), height) ||
      !parse_number(pgm_token(in, path), maxval) || width < 1 || height < 1 ||
      maxval < 1 || maxval > 65535)
    throw Error(path.string() + ": malformed PGM header");
  // pgm_token consumed exactly one whitespace byte after maxval.
  const int bytes = maxval > 255 ? 2 : 1;
  const auto count = static_cast<std::size_t>(width * height * bytes);
  std::vector<unsigned char> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count)
    throw Error(path.string() + ": truncated PGM payload");
  PgmImage img;
  img.maxval = static_cast<int>(maxval);
  img.pixels.resize(height, width);
  std::size_t k = 0;
  for (Index i = 0; i < height; ++i)
    for (Index j = 0; j < width; ++j) {
      unsigned v = data[k++];
      if (bytes == 2) v = (v << 8) | data[k++];
      if (v > static_cast<unsigned>(maxval))
        throw Error(path.string() + ": sample exceeds maxval");
      img.pixels(i, j) = static_cast<double>(v);
    }
  return img;
}

void write_pgm(const DenseMatrix& a, int max_i, const fs::path& path) {
  if (max_i < 1 || max_i > 65535) throw Error("PGM maxval must be in [1, 65535]");
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << a.cols() << ' ' << a.rows() << '\n' << max_i << '\n';
  const bool wide = max_i > 255;
  std::vector<unsigned char> data;
  data.reserve(static_cast<std::size_t>(a.size() * (wide ? 2 : 1)));
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      const double clamped = std::clamp(std::round(a(i, j)), 0.0,
                                        static_cast<double>(max_i));
      const auto v = static_cast<unsigned>(clamped);
      if (wide) data.push_back(static_cast<unsigned char>(v >> 8));
      data.push_back(static_cast<unsigned char>(v & 0xFF));
    }
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

DenseMatrix cube_to_matrix(std::span<const DenseMatrix> slices) {
  if (slices.empty()) throw Error("cube has no slices");
  const Index h = slices.front().rows(), w = slices.front().cols();
  DenseMatrix out(h * w, static_cast<Index>(slices.size()));
  for (std::size_t j = 0; j < slices.size(); ++j) {
    if (slices[j].rows() != h || slices[j].cols() != w)
      throw Error("inconsistent cube slice " + std::to_string(j) + ": " +
                  shape_string(slices[j].rows(), slices[j].cols()) +
                  ", expected " + shape_string(h, w));
    out.col(static_cast<Index>(j)) = slices[j].reshaped();
  }
  return out;
}

std::vector<DenseMatrix> matrix_to_cube(const DenseMatrix& m, Index height,
                                        Index width) {
  if (height < 1 || width < 1 || m.rows() != height * width)
    throw Error("cannot reshape " + shape_string(m.rows(), m.cols()) +
                " into slices of " + shape_string(height, width));
  std::vector<DenseMatrix> slices;
  slices.reserve(static_cast<std::size_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j)
    slices.emplace_back(m.col(j).reshaped(height, width));
  return slices;
}

Cube read_cube_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> pgm, csv;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".pgm") pgm.push_back(entry.path());
    if (ext == ".csv") csv.push_back(entry.path());
  }
  Cube cube;
  auto& files = pgm.empty() ? csv : pgm;
  if (files.empty()) throw Error("no .pgm or .csv slices in '" + dir.string() + "'");
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (!pgm.empty()) {
      PgmImage img = read_pgm(f);
      cube.maxval = std::max(cube.maxval, img.maxval);
      cube.slices.push_back(std::move(img.pixels));
    } else {
      cube.slices.push_back(read_dense_csv(f));
    }
  }
  cube_to_matrix(cube.slices);  // validates slice shapes
  return cube;
}

namespace {

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error("expected number, got '" + s + "'");
  }
  return j.get<double>();
}

json to_json(const ResultRecord& r, bool include_timing) {
  json inst = {{"m", r.instance.m},   {"n", r.instance.n},
               {"q", r.instance.q},   {"sr", r.instance.sr},
               {"seed", r.instance.seed}};
  inst["r"] = r.instance.r ? json(*r.instance.r) : json(nullptr);
  json params = json::object();
  for (const auto& [k, v] : r.params) params[k] = number_or_inf(v);
  json out = {{"solver", r.solver},
              {"instance", inst},
              {"params", params},
              {"iterations", r.iterations},
              {"stop_reason", r.stop_reason},
              {"final_f", number_or_inf(r.final_f)}};
  if (r.eval) {
    json ev = {{"rel_err", number_or_inf(r.eval->rel_err)},
               {"mse", number_or_inf(r.eval->mse)},
               {"psnr", number_or_inf(r.eval->psnr)}};
    if (include_timing) ev["cpu_seconds"] = r.eval->cpu_seconds;
    out["eval"] = ev;
  } else {
    out["eval"] = nullptr;
  }
  if (include_timing) out["cpu_seconds"] = r.cpu_seconds;
  return out;
}

}  // namespace

std::string to_json_line(const ResultRecord& record, bool include_timing) {
  return to_json(record, include_timing).dump();
}

ResultRecord from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
    ResultRecord r;
    r.solver = j.at("solver").get<std::string>();
    const json& inst = j.at("instance");
    r.instance.m = inst.at("m").get<Index>();
    r.instance.n = inst.at("n").get<Index>();
    r.instance.q = inst.at("q").get<Index>();
    if (!inst.at("r").is_null()) r.instance.r = inst.at("r").get<Index>();
    r.instance.sr = inst.at("sr").get<double>();
    r.instance.seed = inst.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("params").items()) r.params[k] = number_from(v);
    r.iterations = j.at("iterations").get<int>();
    r.stop_reason = j.at("stop_reason").get<std::string>();
    r.final_f = number_from(j.at("final_f"));
    if (!j.at("eval").is_null()) {
      const json& ev = j.at("eval");
      EvalReport e;
      e.rel_err = number_from(ev.at("rel_err"));
      e.mse = number_from(ev.at("mse"));
      e.psnr = number_from(ev.at("psnr"));
      e.cpu_seconds = ev.value("cpu_seconds", 0.0);
      r.eval = e;
    }
    r.cpu_seconds = j.value("cpu_seconds", 0.0);
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed result record: ") + e.what());
  }
}

bool same_record(const ResultRecord& a, const ResultRecord& b,
                 bool ignore_timing) {
  return to_json(a, !ignore_timing) == to_json(b, !ignore_timing);
}

std::string format_table(std::span<const ResultRecord> records) {
  std::ostringstream os;
  auto sci = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    std::ostringstream s;
    s << std::scientific << std::setprecision(3) << v;
    return s.str();
  };
  os << std::left << std::setw(11) << "solver" << std::right << std::setw(6)
     << "m" << std::setw(6) << "n" << std::setw(4) << "q" << std::setw(4) << "r"
     << std::setw(6) << "sr" << std::setw(21) << "seed" << std::setw(7)
     << "iters" << std::setw(14) << "stop" << std::setw(11) << "final_f"
     << std::setw(11) << "rel_err" << std::setw(11) << "mse" << std::setw(9)
     << "psnr" << std::setw(9) << "cpu" << '\n';
  for (const auto& r : records) {
    std::ostringstream psnr, cpu, sr;
    psnr << std::fixed << std::setprecision(2);
    if (r.eval) {
      if (std::isinf(r.eval->psnr)) psnr << "inf";
      else psnr << r.eval->psnr;
    } else {
      psnr << "-";
    }
    cpu << std::fixed << std::setprecision(2) << r.cpu_seconds;
    sr << std::fixed << std::setprecision(2) << r.instance.sr;
    os << std::left << std::setw(11) << r.solver << std::right << std::setw(6)
       << r.instance.m << std::setw(6) << r.instance.n << std::setw(4)
       << r.instance.q << std::setw(4)
       << (r.instance.r ? std::to_string(*r.instance.r) : std::string("-"))
       << std::setw(6) << sr.str() << std::setw(21) << r.instance.seed
       << std::setw(7) << r.iterations << std::setw(14) << r.stop_reason
       << std::setw(11) << sci(r.final_f) << std::setw(11)
       << (r.eval ? sci(r.eval->rel_err) : "-") << std::setw(11)
       << (r.eval ? sci(r.eval->mse) : "-") << std::setw(9) << psnr.str()
       << std::setw(9) << cpu.str() << '\n';
  }
  return os.str();
}

void write_results(std::span<const ResultRecord> records, const fs::path& path,
                   const std::optional<fs::path>& table_path) {
  {
    auto out = open_out(path);
    for (const auto& r : records) out << to_json_line(r) << '\n';
    if (!out) throw Error("write failed for '" + path.string() + "'");
  }
  if (table_path) {
    auto out = open_out(*table_path);
    out << format_table(records);
    if (!out) throw Error("write failed for '" + table_path->string() + "'");
  }
}

std::vector<ResultRecord> read_results(const fs::path& path) {
  auto in = open_in(path);
  std::vector<ResultRecord> records;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) records.push_back(from_json_line(line));
  return records;
}

}  // namespace nmfc::io
