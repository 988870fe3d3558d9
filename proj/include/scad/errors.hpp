// Copyright 2026 The scad-gan Authors. All Rights Reserved.
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

namespace scad {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed arguments that violate an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The requested operation is not available under the active configuration.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A computation produced (or would produce) a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An external encoder or embedder plugin could not be loaded.
class AdapterError : public Error {
 public:
  using Error::Error;
};

}  // namespace scad
