// Copyright 2026 The safevisor Authors
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

#ifndef SAFEVISOR_ERROR_HPP_
#define SAFEVISOR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace safevisor {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the set it must belong to (input boxes, X, W).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration (dimensions, grids, DFA files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unknown DFA state / label, or a table lookup outside its range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// No abstract state is related to a concrete state.
class RelationInfeasible : public Error {
 public:
  using Error::Error;
};

// The interface function produced an input outside U.
class InterfaceInfeasible : public Error {
 public:
  using Error::Error;
};

// A time index k >= H was requested.
class HorizonExceeded : public Error {
 public:
  using Error::Error;
};

// A table would exceed the configured memory cap. The message carries a
// sizing report.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Binary or text file does not match its expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// The requested violation budget is below what the advisor can guarantee.
class InfeasibleBudget : public Error {
 public:
  using Error::Error;
};

}  // namespace safevisor

#endif  // SAFEVISOR_ERROR_HPP_
