/*
 * Copyright 2026 The trase-node Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace trase {

/// Base for every error raised by the library. Each subclass maps to one CLI
/// exit code (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (network spec, solver, training options).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed, inconsistent or missing data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A row of an input file could not be parsed.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Argument dimensions disagree with the network or system layout.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& axis, long expected, long actual)
      : Error("dimension mismatch on '" + axis + "': expected " +
              std::to_string(expected) + ", got " + std::to_string(actual)),
        axis_(axis) {}
  const std::string& axis() const { return axis_; }

 private:
  std::string axis_;
};

/// A normalizing quantity (signal energy or peak) is zero.
class DegenerateNormalization : public Error {
 public:
  DegenerateNormalization(const std::string& what, long channel)
      : Error(what + " (channel " + std::to_string(channel) + ")"),
        channel_(channel) {}
  long channel() const { return channel_; }

 private:
  long channel_;
};

/// NaN/Inf or a state component beyond the divergence bound.
class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(double t, const std::string& detail)
      : Error("integration diverged at t = " + std::to_string(t) + ": " + detail),
        time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Adaptive step size underflow.
class StiffnessError : public Error {
 public:
  StiffnessError(double t, double step)
      : Error("step size underflow at t = " + std::to_string(t) +
              " (h = " + std::to_string(step) + ")"),
        time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace trase
