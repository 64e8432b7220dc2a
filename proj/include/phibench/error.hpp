// Copyright 2026 The phibench Authors. All Rights Reserved.
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

namespace phibench {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class UnknownCategory : public Error {
public:
    explicit UnknownCategory(const std::string& label)
        : Error("unknown category: '" + label + "'"), label_(label) {}
    const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

class PlacementError : public Error {
public:
    using Error::Error;
};

/// Remote backend could not be reached or kept failing with retryable errors.
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

/// The backend rejected the request because of its content. Never retried.
class ContentRefused : public Error {
public:
    using Error::Error;
};

enum class SchemaFault { missing_field, bad_enum, count_mismatch, not_parsable };

inline const char* to_string(SchemaFault f) {
    switch (f) {
        case SchemaFault::missing_field: return "missing_field";
        case SchemaFault::bad_enum: return "bad_enum";
        case SchemaFault::count_mismatch: return "count_mismatch";
        case SchemaFault::not_parsable: return "not_parsable";
    }
    return "not_parsable";
}

class SchemaViolation : public Error {
public:
    SchemaViolation(SchemaFault fault, const std::string& detail)
        : Error(std::string("schema violation (") + to_string(fault) + "): " + detail),
          fault_(fault) {}
    SchemaFault fault() const noexcept { return fault_; }

private:
    SchemaFault fault_;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class RegionOutOfBounds : public Error {
public:
    using Error::Error;
};

class EmptyRun : public Error {
public:
    using Error::Error;
};

class IdMismatch : public Error {
public:
    using Error::Error;
};

class NotInstanceEvaluable : public Error {
public:
    using Error::Error;
};

class HeterogeneousRuns : public Error {
public:
    using Error::Error;
};

/// A pipeline setup was assembled without a backend for one of its roles.
class MissingRole : public Error {
public:
    using Error::Error;
};

/// A server could not bind its listening socket.
class BindError : public Error {
public:
    using Error::Error;
};

}  // namespace phibench
