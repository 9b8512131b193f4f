// Copyright 2026 The oproute Authors
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

#ifndef OPROUTE_ERRORS_HPP_
#define OPROUTE_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oproute {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied parameter is outside its documented range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Operand shapes or cross-object invariants do not agree.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A NaN or infinity appeared in a computed tensor.
class NumericHealthError : public Error {
 public:
  using Error::Error;
};

// log() of a non-positive time average and similar domain violations.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An iterative solver's iterate became non-finite or unbounded.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// A graph file is well-formed but lacks required content.
class IngestError : public Error {
 public:
  using Error::Error;
};

// A file could not be parsed; line is 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Experiment configuration failed validation; path names the field.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace oproute

#endif  // OPROUTE_ERRORS_HPP_
