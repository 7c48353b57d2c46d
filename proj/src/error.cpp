#include "tperf/error.hpp"

namespace tperf {

const char* error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Config: return "ConfigError";
        case ErrorCode::EmptyTarget: return "EmptyTarget";
        case ErrorCode::EmptyStudies: return "EmptyStudies";
        case ErrorCode::MissingOutcome: return "MissingOutcome";
        case ErrorCode::OutcomeOnTarget: return "OutcomeOnTarget";
        case ErrorCode::NonFiniteCovariate: return "NonFiniteCovariate";
        case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
        case ErrorCode::MissingScore: return "MissingScore";
        case ErrorCode::MissingPsuLabels: return "MissingPsuLabels";
        case ErrorCode::Csv: return "CsvError";
        case ErrorCode::Separation: return "Separation";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::KindMismatch: return "KindMismatch";
        case ErrorCode::ZeroDenominator: return "ZeroDenominator";
        case ErrorCode::DegenerateScores: return "DegenerateScores";
        case ErrorCode::BracketFailure: return "BracketFailure";
        case ErrorCode::InsufficientStudies: return "InsufficientStudies";
        case ErrorCode::WeightSumViolation: return "WeightSumViolation";
        case ErrorCode::TooManyFailures: return "TooManyFailures";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

ErrorCategory error_category(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Config:
            return ErrorCategory::Config;
        case ErrorCode::EmptyTarget:
        case ErrorCode::EmptyStudies:
        case ErrorCode::MissingOutcome:
        case ErrorCode::OutcomeOnTarget:
        case ErrorCode::NonFiniteCovariate:
        case ErrorCode::NonPositiveWeight:
        case ErrorCode::MissingScore:
        case ErrorCode::MissingPsuLabels:
        case ErrorCode::Csv:
            return ErrorCategory::Data;
        default:
            return ErrorCategory::Estimation;
    }
}

}  // namespace tperf
