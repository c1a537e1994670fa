// Copyright 2026 The tlens Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tlens {

/// Machine-readable failure categories shared by the library, CLI and HTTP service.
enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    InvalidDepth,
    SingularLens,
    ZeroSaliencyMass,
    MissingParameter,
    TooFewImages,
    InvalidKernel,
    NotAnImage,
    TruncatedExif,
    MalformedIfd,
    ZeroDenominator,
    IoError,
    FormatError,
    UnknownSession,
};

constexpr std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InvalidDepth: return "invalid_depth";
    case ErrorCode::SingularLens: return "singular_lens";
    case ErrorCode::ZeroSaliencyMass: return "zero_saliency_mass";
    case ErrorCode::MissingParameter: return "missing_parameter";
    case ErrorCode::TooFewImages: return "too_few_images";
    case ErrorCode::InvalidKernel: return "invalid_kernel";
    case ErrorCode::NotAnImage: return "not_an_image";
    case ErrorCode::TruncatedExif: return "truncated_exif";
    case ErrorCode::MalformedIfd: return "malformed_ifd";
    case ErrorCode::ZeroDenominator: return "zero_denominator";
    case ErrorCode::IoError: return "io_error";
    case ErrorCode::FormatError: return "format_error";
    case ErrorCode::UnknownSession: return "unknown_session";
    }
    return "unknown";
}

/// Process exit status used by the CLI for each code. 0 and 1 are reserved.
constexpr int exit_status(ErrorCode code) noexcept { return 10 + static_cast<int>(code); }

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace tlens
