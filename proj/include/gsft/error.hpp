/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/error.hpp
 *
 * Copyright 2026 The gsft Authors
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

#ifndef GSFT_ERROR_HPP_
#define GSFT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gsft {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    NonPositiveDepth,
    DegenerateMatrix,
    DegenerateConfiguration,
    DegenerateCloud,
    InsufficientSamples,
    InconsistentPointCounts,
    InsufficientCorrespondences,
    ConfigInfeasible,
    ParseError,
    IoError,
    SolverInfeasible,
    SolverFailure,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InconsistentPointCounts: return "InconsistentPointCounts";
    case ErrorCode::InsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorCode::ConfigInfeasible: return "ConfigInfeasible";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SolverInfeasible: return "SolverInfeasible";
    case ErrorCode::SolverFailure: return "SolverFailure";
    }
    return "Unknown";
}

/**
 * The single exception type thrown by the library. The code identifies the
 * failure class so that callers (and the CLI exit-code mapping) can branch on
 * it without parsing messages.
 */
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace gsft

#endif // GSFT_ERROR_HPP_
