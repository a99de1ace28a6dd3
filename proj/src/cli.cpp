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

#include "nmfc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "nmfc/io.hpp"
#include "nmfc/kkt.hpp"
#include "nmfc/metrics.hpp"
#include "nmfc/synth.hpp"

namespace nmfc::cli {

namespace fs = std::filesystem;

int thread_cap() {
  if (const char* env = std::getenv("NMFC_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

namespace {

SolverParams<double> admm_params(const ObservedMatrix<double>* a, Index q,
                                 std::uint64_t seed,
                                 const SolverOverrides& o) {
  SolverParams<double> p;
  if (a) {
    p = default_params(*a, q);
  } else {
    p.q = q;
  }
  if (o.alpha) p.alpha = *o.alpha;
  if (o.beta) p.beta = *o.beta;
  if (o.gamma) p.gamma = *o.gamma;
  p.tol = o.tol;
  p.maxiter = o.maxiter;
  p.seed = seed;
  p.factors = o.factors;
  return p;
}

BaselineParams<double> baseline_params(Index q, std::uint64_t seed,
                                       const SolverOverrides& o) {
  BaselineParams<double> p;
  p.q = q;
  if (o.omega) p.omega = *o.omega;
  if (o.epsilon) p.epsilon = *o.epsilon;
  if (o.tau) p.tau = *o.tau;
  p.mu = o.mu;
  p.tol = o.tol;
  p.maxiter = o.maxiter;
  p.seed = seed;
  return p;
}

}  // namespace

void validate_solver(const std::string& solver, Index q,
                     const SolverOverrides& overrides) {
  if (std::find(kSolverNames.begin(), kSolverNames.end(), solver) ==
      kSolverNames.end())
    throw Error("unknown solver '" + solver + "'");
  if (solver == "admm") {
    admm_params(nullptr, q, 0, overrides).validate();
  } else {
    baseline_params(q, 0, overrides).validate();
  }
}

SolverRun run_solver(const std::string& solver, const ObservedMatrix<double>& a,
                     Index q, std::uint64_t seed,
                     const SolverOverrides& overrides) {
  validate_solver(solver, q, overrides);
  SolverRun run;
  const auto start = std::chrono::steady_clock::now();
  if (solver == "admm") {
    const auto p = admm_params(&a, q, seed, overrides);
    run.solution = solve(a, p);
    run.params = {{"q", static_cast<double>(p.q)},
                  {"alpha", p.alpha},
                  {"beta", p.beta},
                  {"gamma", p.gamma},
                  {"tol", p.tol},
                  {"maxiter", p.maxiter},
                  {"scale_target", p.scale_target},
                  {"seed", static_cast<double>(seed)},
                  {"factors_uv", p.factors == FactorSource::kSplitting ? 1 : 0}};
  } else {
    const auto p = baseline_params(q, seed, overrides);
    const auto kind = baseline_kind_from_string(solver);
    run.solution = run_baseline(kind, a, p);
    run.params = {{"q", static_cast<double>(p.q)},
                  {"tol", p.tol},
                  {"maxiter", p.maxiter},
                  {"seed", static_cast<double>(seed)}};
    if (kind == BaselineKind::kLmafitSor) run.params["omega"] = p.omega;
    if (kind == BaselineKind::kMult) run.params["epsilon"] = p.epsilon;
    if (kind == BaselineKind::kFpca) {
      run.params["tau"] = p.tau;
      run.params["mu"] = p.mu.value_or(default_fpca_mu(a));
    }
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
  return run;
}

namespace {

// Completed matrix: XY off the mask, observations on it.
DenseMatrix completed(const Solution<double>& s, const ObservedMatrix<double>& a) {
  DenseMatrix z = s.X * s.Y;
  a.scatter_into(z);
  return z;
}

io::ResultRecord make_record(const std::string& solver, const SolverRun& run,
                             const ObservedMatrix<double>& a, Index q,
                             std::optional<Index> r, std::uint64_t seed) {
  io::ResultRecord rec;
  rec.solver = solver;
  rec.instance = {a.rows(), a.cols(), q, r, a.mask().sample_rate(), seed};
  rec.params = run.params;
  rec.iterations = run.solution.iterations;
  rec.stop_reason = std::string(to_string(run.solution.stop_reason));
  rec.final_f = run.solution.final_f;
  rec.cpu_seconds = run.seconds;
  return rec;
}

void add_solver_flags(CLI::App* cmd, std::string* solver, SolverOverrides& o) {
  if (solver)
    cmd->add_option("--solver", *solver, "admm|als|mult|lmafit-sor|fpca")
        ->capture_default_str();
  cmd->add_option("--tol", o.tol, "stopping tolerance")->capture_default_str();
  cmd->add_option("--maxiter", o.maxiter, "iteration cap")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "admm penalty on X = U");
  cmd->add_option("--beta", o.beta, "admm penalty on Y = V");
  cmd->add_option("--gamma", o.gamma, "admm multiplier step in (0, 1.618)");
  cmd->add_option("--omega", o.omega, "lmafit-sor relaxation weight >= 1");
  cmd->add_option("--epsilon", o.epsilon, "mult denominator damping");
  cmd->add_option("--tau", o.tau, "fpca gradient step");
  cmd->add_option("--mu", o.mu, "fpca shrinkage weight");
}

// Echoes the active subcommand as a config section that `--config` accepts.
// Unset optional flags are omitted.
void write_config_echo(const CLI::App& app, const fs::path& dir) {
  std::ofstream out(dir / "run_config.toml");
  for (const CLI::App* sub : app.get_subcommands()) {
    out << '[' << sub->get_name() << "]\n";
    std::istringstream lines(sub->config_to_str(true, false));
    for (std::string line; std::getline(lines, line);)
      if (!line.ends_with("=\"\"")) out << line << '\n';
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---- complete -------------------------------------------------------------

struct CompleteFlags {
  std::string input, out_dir, solver = "admm", factors = "xy";
  Index rank = 0;
  std::uint64_t seed = 0;
  bool dump_state = false;
  SolverOverrides o;
};

int cmd_complete(const CLI::App& app, CompleteFlags f, std::ostream& out) {
  if (f.factors == "uv") f.o.factors = FactorSource::kSplitting;
  validate_solver(f.solver, f.rank, f.o);
  const auto a = io::read_observed(f.input);
  if (f.rank > std::min(a.rows(), a.cols()))
    throw Error("--rank exceeds min(m, n)");
  auto run = run_solver(f.solver, a, f.rank, f.seed, f.o);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  io::write_dense_csv(run.solution.X, dir / "X.csv");
  io::write_dense_csv(run.solution.Y, dir / "Y.csv");
  io::write_dense_csv(completed(run.solution, a), dir / "Z.csv");
  if (f.dump_state && run.solution.state) {
    // Map the rescaled iterate back to data units. If the rescaled point is
    // KKT for s*A, this one is KKT for A.
    const auto& st = *run.solution.state;
    const double s = run.solution.scale;
    fs::create_directories(dir / "state");
    io::write_dense_csv(st.X / s, dir / "state" / "X.csv");
    io::write_dense_csv(st.Y, dir / "state" / "Y.csv");
    io::write_dense_csv(st.Z / s, dir / "state" / "Z.csv");
    io::write_dense_csv(st.U / s, dir / "state" / "U.csv");
    io::write_dense_csv(st.V, dir / "state" / "V.csv");
    io::write_dense_csv(st.Lambda / s, dir / "state" / "Lambda.csv");
    io::write_dense_csv(st.Pi / (s * s), dir / "state" / "Pi.csv");
  }
  const std::vector<io::ResultRecord> recs = {
      make_record(f.solver, run, a, f.rank, std::nullopt, f.seed)};
  io::write_results(recs, dir / "result.jsonl", dir / "result.txt");
  write_config_echo(app, dir);
  out << io::format_table(recs);
  if (run.solution.clamp_magnitude > 0)
    out << "clamped negative factor entries up to "
        << run.solution.clamp_magnitude << "\n";
  return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchFlags {
  Index m = 200, n = 200;
  std::vector<Index> ranks = {10, 20};
  std::vector<double> srs = {1.0, 0.75, 0.5, 0.25};
  int trials = 10;
  std::uint64_t seed0 = 0;
  std::vector<std::string> solvers = {"admm"};
  std::string out_dir;
  SolverOverrides o;
};

int cmd_bench(const CLI::App& app, const BenchFlags& f, std::ostream& out) {
  if (f.trials < 1) throw Error("--trials must be >= 1");
  for (const auto& s : f.solvers)
    for (Index r : f.ranks) validate_solver(s, r, f.o);
  for (Index r : f.ranks)
    if (r < 1 || r > std::min(f.m, f.n)) throw Error("rank outside [1, min(m, n)]");
  for (double sr : f.srs)
    if (!(sr > 0 && sr <= 1)) throw Error("sample rate outside (0, 1]");

  struct Task {
    Index rank;
    double sr;
    int trial;
  };
  std::vector<Task> tasks;
  for (Index r : f.ranks)
    for (double sr : f.srs)
      for (int t = 0; t < f.trials; ++t) tasks.push_back({r, sr, t});

  const std::size_t per_task = f.solvers.size();
  std::vector<io::ResultRecord> records(tasks.size() * per_task);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<std::string> failure;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        const Task& t = tasks[i];
        const std::uint64_t seed = f.seed0 + static_cast<std::uint64_t>(t.trial);
        auto [a, problem] = make_problem(f.m, f.n, t.rank, t.sr, seed);
        for (std::size_t s = 0; s < per_task; ++s) {
          const auto run = run_solver(f.solvers[s], a, t.rank, seed, f.o);
          auto rec = make_record(f.solvers[s], run, a, t.rank, t.rank, seed);
          rec.instance.sr = t.sr;
          EvalReport ev = evaluate(run.solution.X * run.solution.Y, problem.M,
                                   problem.M.maxCoeff());
          ev.cpu_seconds = run.seconds;
          rec.eval = ev;
          records[i * per_task + s] = std::move(rec);
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = e.what();
      }
    }
  };
  const int workers =
      std::max(1, std::min<int>(thread_cap(), static_cast<int>(tasks.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) throw Error(*failure);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  io::write_results(records, dir / "runs.jsonl", dir / "runs.txt");
  write_config_echo(app, dir);

  std::ofstream summary(dir / "summary.csv");
  summary << "rank,sr,solver,trials,mean_rel_err,median_rel_err,mean_cpu_seconds\n";
  out << std::left << std::setw(6) << "rank" << std::setw(7) << "sr"
      << std::setw(12) << "solver" << std::setw(14) << "mean_rel_err"
      << std::setw(16) << "median_rel_err" << "mean_cpu_s\n";
  for (Index r : f.ranks)
    for (double sr : f.srs)
      for (const auto& solver : f.solvers) {
        std::vector<double> errs, secs;
        for (const auto& rec : records)
          if (rec.solver == solver && rec.instance.q == r && rec.instance.sr == sr) {
            errs.push_back(rec.eval->rel_err);
            secs.push_back(rec.cpu_seconds);
          }
        const double n = static_cast<double>(errs.size());
        const double mean_err = std::accumulate(errs.begin(), errs.end(), 0.0) / n;
        const double mean_sec = std::accumulate(secs.begin(), secs.end(), 0.0) / n;
        const double med = median(errs);
        summary << r << ',' << io::format_double(sr) << ',' << solver << ','
                << errs.size() << ',' << io::format_double(mean_err) << ','
                << io::format_double(med) << ',' << io::format_double(mean_sec)
                << '\n';
        std::ostringstream e1, e2, t;
        e1 << std::scientific << std::setprecision(3) << mean_err;
        e2 << std::scientific << std::setprecision(3) << med;
        t << std::fixed << std::setprecision(3) << mean_sec;
        out << std::left << std::setw(6) << r << std::setw(7)
            << io::format_double(sr) << std::setw(12) << solver << std::setw(14)
            << e1.str() << std::setw(16) << e2.str() << t.str() << '\n';
      }
  return 0;
}

// ---- image ----------------------------------------------------------------

struct ImageFlags {
  std::string input, out_dir, solver = "admm";
  double sr = 0.3;
  Index rank = 40;
  std::uint64_t seed = 0;
  SolverOverrides o;
};

int cmd_image(const CLI::App& app, const ImageFlags& f, std::ostream& out) {
  validate_solver(f.solver, f.rank, f.o);
  if (!(f.sr > 0 && f.sr <= 1)) throw Error("--sr outside (0, 1]");

  const bool is_cube = fs::is_directory(f.input);
  DenseMatrix truth;
  double max_i = 1.0;
  int pgm_max = 255;
  Index slice_h = 0, slice_w = 0;
  bool csv_slices = false;
  if (is_cube) {
    const auto cube = io::read_cube_dir(f.input);
    truth = io::cube_to_matrix(cube.slices);
    slice_h = cube.slices.front().rows();
    slice_w = cube.slices.front().cols();
    csv_slices = cube.maxval == 0;
    max_i = csv_slices ? truth.maxCoeff() : static_cast<double>(cube.maxval);
    pgm_max = cube.maxval;
  } else {
    const auto img = io::read_pgm(f.input);
    pgm_max = img.maxval;
    truth = img.pixels / static_cast<double>(img.maxval);
  }
  if (f.rank > std::min(truth.rows(), truth.cols()))
    throw Error("--rank exceeds min(m, n)");

  const auto mask = sample_mask(truth.rows(), truth.cols(), f.sr, f.seed);
  const auto a = ObservedMatrix<double>::sample(truth, mask);
  const auto run = run_solver(f.solver, a, f.rank, f.seed, f.o);
  const DenseMatrix recovered = completed(run.solution, a);
  EvalReport ev = evaluate(recovered, truth, max_i);
  ev.cpu_seconds = run.seconds;

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  if (is_cube) {
    const auto slices = io::matrix_to_cube(recovered, slice_h, slice_w);
    for (std::size_t j = 0; j < slices.size(); ++j) {
      std::ostringstream name;
      name << "slice_" << std::setw(4) << std::setfill('0') << j;
      if (csv_slices)
        io::write_dense_csv(slices[j], dir / (name.str() + ".csv"));
      else
        io::write_pgm(slices[j], pgm_max, dir / (name.str() + ".pgm"));
    }
  } else {
    io::write_pgm(recovered * static_cast<double>(pgm_max), pgm_max,
                  dir / "recovered.pgm");
  }
  auto rec = make_record(f.solver, run, a, f.rank, std::nullopt, f.seed);
  rec.instance.sr = f.sr;
  rec.eval = ev;
  const std::vector<io::ResultRecord> recs = {rec};
  io::write_results(recs, dir / "result.jsonl", dir / "result.txt");
  write_config_echo(app, dir);
  out << io::format_table(recs);
  return 0;
}

// ---- kkt-check ------------------------------------------------------------

struct KktFlags {
  std::string x, y, z, u, v, lambda, pi, input;
  double tol = 1e-4;
};

int cmd_kkt_check(const KktFlags& f, std::ostream& out) {
  if (!(f.tol > 0)) throw Error("--tol must be > 0");
  const auto a = io::read_observed(f.input);
  const auto report = kkt_residuals<double>(
      io::read_dense_csv(f.x), io::read_dense_csv(f.y), io::read_dense_csv(f.z),
      io::read_dense_csv(f.u), io::read_dense_csv(f.v),
      io::read_dense_csv(f.lambda), io::read_dense_csv(f.pi), a);
  const auto raw = report.entries(false);
  const auto scaled = report.entries(true);
  bool ok = true;
  out << "normalizer " << io::format_double(report.normalizer) << '\n';
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const bool pass = scaled[i].second <= f.tol;
    ok = ok && pass;
    out << raw[i].first << " raw=" << io::format_double(raw[i].second)
        << " scaled=" << io::format_double(scaled[i].second)
        << (pass ? "" : " FAIL") << '\n';
  }
  out << (ok ? "KKT satisfied" : "KKT violated") << " at tol "
      << io::format_double(f.tol) << '\n';
  return ok ? 0 : 1;
}

// ---- synth ----------------------------------------------------------------

struct SynthFlags {
  Index m = 50, n = 50, r = 5;
  double sr = 0.6;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int cmd_synth(const CLI::App& app, const SynthFlags& f, std::ostream& out) {
  auto [a, problem] = make_problem(f.m, f.n, f.r, f.sr, f.seed);
  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  io::write_observed(a, dir / "observed.txt");
  io::write_dense_csv(problem.M, dir / "truth.csv");
  write_config_echo(app, dir);
  out << "wrote " << a.mask().size() << " observed entries of a "
      << shape_string(f.m, f.n) << " rank-" << f.r << " matrix to " << f.out_dir
      << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Nonnegative matrix factorization with missing entries"};
  app.set_config("--config", "", "read flags from a key = value config file");
  app.require_subcommand(1);

  CompleteFlags cf;
  auto* complete = app.add_subcommand("complete", "factor and complete an observed matrix");
  complete->configurable();
  complete->add_option("--input", cf.input, "observed-entry file")->required();
  complete->add_option("--rank", cf.rank, "inner dimension q")->required();
  complete->add_option("--seed", cf.seed, "initialization seed")->capture_default_str();
  complete->add_option("--factors", cf.factors, "xy (iterates) or uv (projected copies)")
      ->check(CLI::IsMember({"xy", "uv"}))
      ->capture_default_str();
  complete->add_flag("--dump-state", cf.dump_state,
                     "also write the admm iterate and multipliers under state/");
  complete->add_option("--out", cf.out_dir, "output directory")->required();
  add_solver_flags(complete, &cf.solver, cf.o);

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "synthetic recovery benchmark");
  bench->configurable();
  bench->add_option("--m", bf.m)->capture_default_str();
  bench->add_option("--n", bf.n)->capture_default_str();
  bench->add_option("--ranks", bf.ranks)->delimiter(',')->capture_default_str();
  bench->add_option("--srs", bf.srs)->delimiter(',')->capture_default_str();
  bench->add_option("--trials", bf.trials)->capture_default_str();
  bench->add_option("--seed0", bf.seed0)->capture_default_str();
  bench->add_option("--solvers", bf.solvers)->delimiter(',')->capture_default_str();
  bench->add_option("--out", bf.out_dir, "output directory")->required();
  add_solver_flags(bench, nullptr, bf.o);

  ImageFlags imf;
  auto* image = app.add_subcommand("image", "recover a masked image or cube");
  image->configurable();
  image->add_option("--input", imf.input, "PGM file or directory of slices")->required();
  image->add_option("--sr", imf.sr, "sample rate")->capture_default_str();
  image->add_option("--rank", imf.rank, "inner dimension q")->capture_default_str();
  image->add_option("--seed", imf.seed, "mask and initialization seed")->capture_default_str();
  image->add_option("--out", imf.out_dir, "output directory")->required();
  add_solver_flags(image, &imf.solver, imf.o);

  KktFlags kf;
  auto* kkt = app.add_subcommand("kkt-check", "evaluate first-order optimality residuals");
  kkt->configurable();
  kkt->add_option("--x", kf.x)->required();
  kkt->add_option("--y", kf.y)->required();
  kkt->add_option("--z", kf.z)->required();
  kkt->add_option("--u", kf.u)->required();
  kkt->add_option("--v", kf.v)->required();
  kkt->add_option("--lambda", kf.lambda)->required();
  kkt->add_option("--pi", kf.pi)->required();
  kkt->add_option("--input", kf.input, "observed-entry file")->required();
  kkt->add_option("--tol", kf.tol)->capture_default_str();

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "write a random L*D*R instance");
  synth->configurable();
  synth->add_option("--m", sf.m)->capture_default_str();
  synth->add_option("--n", sf.n)->capture_default_str();
  synth->add_option("--r", sf.r)->capture_default_str();
  synth->add_option("--sr", sf.sr)->capture_default_str();
  synth->add_option("--seed", sf.seed)->capture_default_str();
  synth->add_option("--out", sf.out_dir)->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  Eigen::setNbThreads(thread_cap());
  try {
    if (*complete) return cmd_complete(app, cf, out);
    if (*bench) return cmd_bench(app, bf, out);
    if (*image) return cmd_image(app, imf, out);
    if (*kkt) return cmd_kkt_check(kf, out);
    if (*synth) return cmd_synth(app, sf, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace nmfc::cli
