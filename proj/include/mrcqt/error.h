// Copyright 2026 The mrcqt Authors
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

#ifndef MRCQT_ERROR_H_
#define MRCQT_ERROR_H_

#include <stdexcept>
#include <string>

namespace mrcqt {

// Process exit codes shared by every CLI command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const { return kExitData; }
};

// Array lengths or tensor shapes that do not fit together.
class SizeError : public Error {
 public:
  using Error::Error;
};

// A value outside its documented domain (negative sigma, window too short...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Configuration schema violations; maps to the usage exit code.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return kExitUsage; }
};

// NaN/Inf, failed factorizations, ill-conditioned frames.
class NumericalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return kExitNumerical; }
};

}  // namespace mrcqt

#endif  // MRCQT_ERROR_H_
