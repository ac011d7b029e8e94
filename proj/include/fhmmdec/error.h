// include/fhmmdec/error.h

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef FHMMDEC_ERROR_H_
#define FHMMDEC_ERROR_H_

#include <stdexcept>
#include <string>

namespace fhmmdec {

// Process exit codes used by the CLI. Library code throws the matching
// exception type; main() translates.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitIo = 2,
  kExitNumeric = 3,
  kExitCapacity = 4,
};

class Error : public std::runtime_error {
 public:
  Error(std::string msg, int exit_code)
      : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

// Bad configuration or data that fails an invariant check.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::string msg)
      : Error(std::move(msg), kExitValidation) {}
};

// File access problems and malformed on-disk formats.
class IoError : public Error {
 public:
  explicit IoError(std::string msg) : Error(std::move(msg), kExitIo) {}
};

// Decode failures and non-finite arithmetic (dead frames, message blow-up).
class NumericError : public Error {
 public:
  explicit NumericError(std::string msg) : Error(std::move(msg), kExitNumeric) {}
};

// Instance exceeds a configured resource budget.
class CapacityError : public Error {
 public:
  explicit CapacityError(std::string msg)
      : Error(std::move(msg), kExitCapacity) {}
};

}  // namespace fhmmdec

#endif  // FHMMDEC_ERROR_H_
