// Copyright 2026 The mpelu-kernels Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace mpelu {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument values or incompatible shapes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong order, e.g. backward before forward.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (CIFAR/IDX/tensor dump/config).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint does not match the network it is loaded into.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during a forward pass or loss evaluation.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite gradient or an exploding loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// LSUV met a layer whose output variance is zero.
class SingularInitError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpelu
