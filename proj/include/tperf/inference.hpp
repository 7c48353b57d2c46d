#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tperf/dataset.hpp"

namespace tperf {

enum class BootstrapKind {
    Iid,                 // rows with replacement, separately within target and study rows
    StratifiedTwoStage,  // target PSUs, then SSUs within each drawn PSU; study rows iid
};

const char* bootstrap_kind_name(BootstrapKind k);
std::optional<BootstrapKind> parse_bootstrap_kind(const std::string& s);

struct BootstrapPlan {
    BootstrapKind kind = BootstrapKind::Iid;
    int replicates = 200;
    std::uint64_t seed = 1;
    double ci_level = 0.95;
    bool refit_nuisances = true;
    unsigned threads = 1;
    double max_failure_rate = 0.2;
    // Resample study rows within each source label instead of pooled.
    bool stratify_studies = false;

    /// Throws InvalidArgument on B < 2 or a level outside (0, 1).
    void check() const;
};

/// Row indices of one bootstrap sample of `data`. Target rows come first.
std::vector<std::size_t> resample_rows(const AnalysisDataset& data, BootstrapKind kind,
                                       bool stratify_studies, std::mt19937_64& rng);

/// What an analysis closure sees. `rows` maps each row of `data` back to the
/// original dataset, so closures can reuse original-sample nuisance
/// predictions when `refit` is off. `index` is -1 for the point estimate.
struct ReplicateContext {
    const AnalysisDataset& data;
    std::span<const std::size_t> rows;
    bool refit;
    int index;
};

/// Returns one value per statistic. NaN marks a statistic that failed in this
/// replicate; an Error of the estimation category fails the whole replicate.
using Analysis = std::function<std::vector<double>(const ReplicateContext&)>;

struct IntervalEstimate {
    double point = 0.0;
    double se = 0.0;  // standard deviation over successful replicates
    double lo = 0.0;  // percentile interval
    double hi = 0.0;
    int replicates_used = 0;
    int failed = 0;
};

struct BootstrapResult {
    std::vector<IntervalEstimate> intervals;
    std::vector<std::vector<double>> replicate_values;  // [replicate][statistic]
    int failed_replicates = 0;
    std::map<std::string, int> failure_reasons;
};

/// Runs `analysis` on the original data and on plan.replicates resamples,
/// in parallel. Results do not depend on the thread count. Throws
/// TooManyFailures when more than plan.max_failure_rate of replicates fail,
/// MissingPsuLabels for the two-stage kind without PSU labels.
BootstrapResult bootstrap(const AnalysisDataset& data, const BootstrapPlan& plan,
                          const Analysis& analysis);

/// Type-7 sample quantile (linear interpolation between order statistics).
double quantile_type7(std::span<const double> sorted, double p);

/// Point, standard deviation and percentile interval from replicate values;
/// NaN values count as failures.
IntervalEstimate summarize_replicates(double point, std::span<const double> values,
                                      double ci_level);

/// Calls fn(i) for i in [0, n) on up to `threads` threads; the first
/// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace tperf
