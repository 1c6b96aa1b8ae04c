// Copyright 2026 The epir Authors
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

#ifndef EPIR_ERROR_HPP_
#define EPIR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace epir {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter is outside the domain an operation accepts.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Two operands violate a shared contract (e.g. mismatched lengths).
class ContractError : public Error {
 public:
  using Error::Error;
};

// A server request references records that do not exist.
class RequestError : public Error {
 public:
  using Error::Error;
};

class ReconstructionError : public Error {
 public:
  using Error::Error;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

// Enumeration or simulation request exceeds what the harness will attempt.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Malformed bytes on the wire.
class WireError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace epir

#endif  // EPIR_ERROR_HPP_
