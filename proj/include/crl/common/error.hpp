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

#ifndef CRL_COMMON_ERROR_HPP_
#define CRL_COMMON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace crl {

// Base class of every error raised by the library. Subclasses name the
// failure category; the CLI maps ConfigError to exit code 2 and everything
// else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CRL_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  };

CRL_DEFINE_ERROR(ConfigError)
CRL_DEFINE_ERROR(ShapeError)
CRL_DEFINE_ERROR(GraphError)
CRL_DEFINE_ERROR(FrozenError)
CRL_DEFINE_ERROR(BudgetError)
CRL_DEFINE_ERROR(FormatError)
CRL_DEFINE_ERROR(VersionError)
CRL_DEFINE_ERROR(IOError)
CRL_DEFINE_ERROR(DegenerateError)
CRL_DEFINE_ERROR(BatchError)
CRL_DEFINE_ERROR(UnreachableError)

#undef CRL_DEFINE_ERROR

}  // namespace crl

#endif  // CRL_COMMON_ERROR_HPP_
