// Copyright 2026 The shapeprobe Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace shapeprobe {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kRuntime = 1,
  kConfig = 2,
  kIo = 3,
  kValidation = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::kConfig, "config error: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(ExitCode::kIo, "i/o error: " + what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ExitCode::kValidation, "validation error: " + what) {}
};

// Procedural generation ran out of its retry budget.
class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& what)
      : Error(ExitCode::kRuntime, "generation error: " + what) {}
};

class ProbeError : public Error {
 public:
  explicit ProbeError(const std::string& what)
      : Error(ExitCode::kValidation, "probe error: " + what) {}
};

class MetricError : public Error {
 public:
  explicit MetricError(const std::string& what)
      : Error(ExitCode::kValidation, "metric error: " + what) {}
};

}  // namespace shapeprobe
