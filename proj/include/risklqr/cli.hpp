/*
 * Copyright 2026 The risklqr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: moments | synthesize | evaluate | simulate | sweep.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace risklqr::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,       // bad flags or config
  kInfeasible = 2,  // budget not attainable below mu_max
  kNumerical = 3,   // NumericalError or ConvergenceError
};

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace risklqr::cli
