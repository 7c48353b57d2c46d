#pragma once

#include <stdexcept>
#include <string>

namespace tperf {

// Error kinds raised by the estimation core. Grouped so the C API and the CLI
// can map them onto exit codes (config / data / estimation).
enum class ErrorCode {
    // configuration
    Config,
    // data validation
    EmptyTarget,
    EmptyStudies,
    MissingOutcome,
    OutcomeOnTarget,
    NonFiniteCovariate,
    NonPositiveWeight,
    MissingScore,
    MissingPsuLabels,
    Csv,
    // fitting / estimation
    Separation,
    RankDeficient,
    KindMismatch,
    ZeroDenominator,
    DegenerateScores,
    BracketFailure,
    InsufficientStudies,
    WeightSumViolation,
    TooManyFailures,
    InvalidArgument,
};

const char* error_name(ErrorCode code) noexcept;

enum class ErrorCategory { Config, Data, Estimation };

ErrorCategory error_category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tperf
