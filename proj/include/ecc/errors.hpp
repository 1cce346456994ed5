// Copyright 2026 The eccvol Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ecc {

// Exceptions thrown by the library. The CLI maps them onto exit codes:
// DataError -> 2, ProviderError/ClientError -> 3, std::invalid_argument -> 1.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Binary file does not match its declared format.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class DuplicateRecordError : public DataError {
 public:
  using DataError::DataError;
};

/// All returns in a volatility window are identical, so ln(0) would be taken.
class ZeroVolatilityError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientHistoryError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An embedding provider failed to produce a vector.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// A chat-LLM client failed (transport, HTTP status, or response shape).
class ClientError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecc
