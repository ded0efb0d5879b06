// Copyright 2026 The CRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRL_CLI_COMMANDS_HPP_
#define CRL_CLI_COMMANDS_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace crl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

// Entry point behind the `crl` executable. args excludes the program name.
// Returns 0 on success, 2 for configuration or usage errors, 1 otherwise.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crl::cli

#endif  // CRL_CLI_COMMANDS_HPP_
