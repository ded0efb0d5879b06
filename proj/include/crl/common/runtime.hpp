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

#ifndef CRL_COMMON_RUNTIME_HPP_
#define CRL_COMMON_RUNTIME_HPP_

namespace crl {

// Keeps large freed blocks on the heap instead of returning them to the OS.
// No-op outside glibc.
void tune_allocator();

}  // namespace crl

#endif  // CRL_COMMON_RUNTIME_HPP_
