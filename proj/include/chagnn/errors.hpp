/*
 *  Copyright 2026 The chagnn Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chagnn {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed malformed arguments (bad ids, mismatched dimensions, ...).
class InputError : public Error {
public:
    using Error::Error;
};

// A configuration cannot be realized (infeasible budget, generator spec, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// On-disk data does not follow the dataset directory format.
class FormatError : public Error {
public:
    FormatError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
          file_(file),
          line_(line) {}

    const std::string& file() const noexcept { return file_; }
    // 1-based; 0 when the problem is not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

// Ratio with an empty denominator (e.g. homophily of a graph with no countable edges).
class UndefinedRatioError : public Error {
public:
    using Error::Error;
};

// Theorem scenario with zero homophily contrast.
class DegenerateScenarioError : public Error {
public:
    using Error::Error;
};

}  // namespace chagnn
