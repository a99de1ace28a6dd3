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

#ifndef NMFC_CLI_HPP_
#define NMFC_CLI_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nmfc/admm.hpp"
#include "nmfc/baselines.hpp"
#include "nmfc/matstore.hpp"

namespace nmfc::cli {

inline const std::vector<std::string> kSolverNames = {"admm", "als", "mult",
                                                      "lmafit-sor", "fpca"};

// Optional per-run overrides; unset fields take the solver defaults.
struct SolverOverrides {
  std::optional<double> alpha, beta, gamma;
  std::optional<double> omega, epsilon, tau, mu;
  double tol = 1e-5;
  int maxiter = 2000;
  FactorSource factors = FactorSource::kIterates;
};

struct SolverRun {
  Solution<double> solution;
  std::map<std::string, double> params;  // effective parameters, for echo
  double seconds = 0;
};

// Throws nmfc::Error on an unknown solver name or an invalid parameter.
void validate_solver(const std::string& solver, Index q,
                     const SolverOverrides& overrides);

SolverRun run_solver(const std::string& solver, const ObservedMatrix<double>& a,
                     Index q, std::uint64_t seed,
                     const SolverOverrides& overrides);

// Worker count from NMFC_THREADS (default 1).
int thread_cap();

// Entry point shared by the executable and the tests. args[0] is the program
// name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace nmfc::cli

#endif  // NMFC_CLI_HPP_
