// Copyright 2026 The Promptex Authors
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

#ifndef PROMPTEX_TOOLS_CLI_H_
#define PROMPTEX_TOOLS_CLI_H_

#include <iosfwd>

namespace promptex::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutputDirEnv = "PROMPTEX_OUTPUT_DIR";

// Runs one `promptex <command>` invocation. Progress goes to `out`; failures
// are reported on `err` as a single-line JSON error record.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace promptex::cli

#endif  // PROMPTEX_TOOLS_CLI_H_
