#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asymret {

enum class ErrorCode {
    // ingest
    file_not_found,
    no_parsable_rows,
    duplicate_date,
    malformed_row,
    // returns
    insufficient_points,
    window_too_large,
    // diststats
    empty_sample,
    degenerate_sample,
    zero_variance,
    // tailfit
    tail_too_small,
    degenerate_x,
    invalid_level,
    rank_out_of_range,
    // svmodels
    invalid_params,
    non_positive_argument,
    invalid_tau,
    nonconvergence,
    numeric_overflow,
    // pipeline
    config_invalid,
    input_unreadable,
    stage_not_run,
    invalid_argument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::file_not_found: return "file-not-found";
    case ErrorCode::no_parsable_rows: return "no-parsable-rows";
    case ErrorCode::duplicate_date: return "duplicate-date";
    case ErrorCode::malformed_row: return "malformed-row";
    case ErrorCode::insufficient_points: return "insufficient-points";
    case ErrorCode::window_too_large: return "window-too-large";
    case ErrorCode::empty_sample: return "empty-sample";
    case ErrorCode::degenerate_sample: return "degenerate-sample";
    case ErrorCode::zero_variance: return "zero-variance";
    case ErrorCode::tail_too_small: return "tail-too-small";
    case ErrorCode::degenerate_x: return "degenerate-x";
    case ErrorCode::invalid_level: return "invalid-level";
    case ErrorCode::rank_out_of_range: return "rank-out-of-range";
    case ErrorCode::invalid_params: return "invalid-params";
    case ErrorCode::non_positive_argument: return "non-positive-argument";
    case ErrorCode::invalid_tau: return "invalid-tau";
    case ErrorCode::nonconvergence: return "nonconvergence";
    case ErrorCode::numeric_overflow: return "numeric-overflow";
    case ErrorCode::config_invalid: return "config-invalid";
    case ErrorCode::input_unreadable: return "input-unreadable";
    case ErrorCode::stage_not_run: return "stage-not-run";
    case ErrorCode::invalid_argument: return "invalid-argument";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Configuration problems map to CLI exit code 2, everything else to 3.
constexpr bool is_config_error(ErrorCode code) noexcept
{
    return code == ErrorCode::config_invalid || code == ErrorCode::invalid_argument
        || code == ErrorCode::invalid_level || code == ErrorCode::invalid_params
        || code == ErrorCode::invalid_tau;
}

} // namespace asymret
