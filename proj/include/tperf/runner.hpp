#pragma once

#include <string>

#include "tperf/config.hpp"

namespace tperf {

inline constexpr const char* kVersion = "1.0.0";

/// The three output documents of a run, byte-for-byte what gets written.
struct RunOutputs {
    std::string results_json;
    std::string results_csv;
    std::string provenance_json;
};

/// Executes the configured command. Data and estimation errors that prevent
/// any result propagate; failures confined to one cell are recorded in it.
RunOutputs run_command(const LoadedConfig& loaded);

/// Writes results.json, results.csv and provenance.json into `dir`, creating
/// it when needed.
void write_outputs(const RunOutputs& outputs, const std::string& dir);

}  // namespace tperf
