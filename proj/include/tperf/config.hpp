#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tperf/basis.hpp"
#include "tperf/inference.hpp"
#include "tperf/metrics.hpp"
#include "tperf/nuisance.hpp"
#include "tperf/simulation.hpp"

namespace tperf {

enum class Command { Evaluate, Simulate, TiltScan, Calibrate };

const char* command_name(Command c);
std::optional<Command> parse_command(const std::string& s);

/// A basis as written in a config: covariates by name, resolved against the
/// dataset once it is loaded.
struct BasisRequest {
    enum class Preset { None, Intercept, Linear };
    Preset preset = Preset::Linear;  // Linear: every covariate, in file order
    bool include_intercept = true;
    struct Term {
        Transform transform = Transform::Identity;
        std::vector<std::string> vars;
        int degree = 1;
    };
    std::vector<Term> terms;  // appended after the preset's columns

    /// Throws Config naming `where` and the first unknown covariate.
    BasisSpec resolve(const std::vector<std::string>& covariates, const std::string& where) const;
};

/// Requested performance measure: a threshold metric, a risk under a loss, or AUC.
struct MetricSpec {
    enum class Kind { Threshold, Risk, Auc };
    Kind kind = Kind::Threshold;
    Metric metric = Metric::Sensitivity;  // Threshold only
    Loss loss = Loss::Brier;              // Risk only

    std::string name() const;
    static std::optional<MetricSpec> parse(const std::string& s);
};

struct ThresholdRule {
    enum class Kind { Fixed, Youden };
    Kind kind = Kind::Youden;
    double value = 0.5;                             // Fixed
    EstimatorKind youden_estimator = EstimatorKind::Source;  // Youden
};

struct ModelSpec {
    bool use_score_column = true;
    BasisRequest basis;
    std::vector<double> coefficients;
};

struct TiltConfig {
    BasisRequest study_basis;                 // per-study outcome models
    std::vector<double> gamma_grid{0.0};      // tilt-scan
    std::map<int, double> gamma;              // fixed tilts for the diagnostic
    std::optional<double> target_prevalence;  // calibrated mode
    std::string combine = "inverse_variance";  // or "equal", or explicit weights
    std::vector<double> combine_weights;
    double bracket_lo = -10.0, bracket_hi = 10.0, bracket_limit = 30.0, tol = 1e-10;
    int diagnostic_bins = 5;
    int diagnostic_replicates = 0;
};

struct RunConfig {
    Command command = Command::Evaluate;
    std::string data_path;
    std::uint64_t seed = 20240601;
    unsigned threads = 1;
    std::string out_dir = ".";

    ModelSpec model;
    ThresholdRule threshold;
    std::vector<MetricSpec> metrics;
    std::vector<EstimatorKind> estimators;
    bool use_survey_weights = false;
    bool auc_tie_half_credit = false;
    bool influence_function_se = true;  // adds the plug-in SE for DR sensitivity
    BasisRequest outcome_basis;
    BasisRequest participation_basis;
    FitOptions fit;
    BootstrapPlan bootstrap;  // replicates == 0 disables resampling
    TiltConfig tilt;
    SimulationConfig simulation;
};

/// Flags that take precedence over config values.
struct ConfigOverrides {
    std::optional<std::string> data_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

struct LoadedConfig {
    RunConfig config;
    std::string canonical;  // effective config as sorted JSON, overrides applied
    std::string hash;       // FNV-1a 64 of canonical minus threads and out, hex
};

/// Parses JSON config text. Unknown keys, wrong types and bad values raise
/// ConfigError with the JSON path; syntax errors carry line and column.
LoadedConfig parse_config(const std::string& text, Command command,
                          const ConfigOverrides& overrides = {});

std::string fnv1a_hex(const std::string& bytes);

}  // namespace tperf
