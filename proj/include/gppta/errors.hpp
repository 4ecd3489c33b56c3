/*
 * Copyright 2026 The gppta Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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
#include <utility>
#include <vector>

namespace gppta {

/// Argument outside the mathematical domain of a function (e.g. a
/// non-positive frequency).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid model parameter (noise level, kernel hyperparameters).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Caller broke a precondition (length mismatch, empty grid, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Factorization or other floating point failure.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration did not reach its tolerance. Carries the last iterate.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, std::vector<double> last_iterate)
        : NumericalError(what), last_iterate_(std::move(last_iterate)) {}

    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

/// Configuration or request validation failure; lists every offending field.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::vector<std::string> fields)
        : std::invalid_argument(make_message(fields)), fields_(std::move(fields)) {}

    ValidationError(std::vector<std::string> fields, const std::string& detail)
        : std::invalid_argument(make_message(fields) + ": " + detail),
          fields_(std::move(fields)) {}

    const std::vector<std::string>& fields() const noexcept { return fields_; }

private:
    static std::string make_message(const std::vector<std::string>& fields) {
        std::string msg = "invalid field(s):";
        for (const auto& f : fields) msg += " " + f;
        return msg;
    }

    std::vector<std::string> fields_;
};

/// Operation not allowed in the current session status.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace gppta
