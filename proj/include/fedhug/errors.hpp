/**
 * Copyright 2026 The fedhug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
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

namespace fedhug {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sliding-window length is out of range for the waveform.
class InvalidWindowError : public Error {
 public:
  using Error::Error;
};

/// Signal (or every segment of it) has zero energy.
class DegenerateSignalError : public Error {
 public:
  using Error::Error;
};

/// Tensor/matrix/vector dimensions do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class EmptyBatchError : public Error {
 public:
  using Error::Error;
};

/// Resultant vector of a batch is (numerically) zero.
class DegenerateResultantError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of the function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Fusing two distribution states would produce a zero mean direction.
class DegenerateFusionError : public Error {
 public:
  using Error::Error;
};

/// Periodogram carries no usable power.
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

/// A client could not produce a usable round contribution.
class ClientFailureError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Too many samples were excluded during an evaluation pass.
class EvalIntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedhug
