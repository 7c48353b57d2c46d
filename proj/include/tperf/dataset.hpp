#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tperf/error.hpp"

namespace tperf {

/// One observation. Target rows (source 0) carry no outcome.
struct DataRow {
    std::vector<double> x;
    int source = 0;
    std::optional<int> y;
    double weight = 1.0;
    std::optional<double> score;
    std::optional<std::string> psu;
    std::optional<std::string> ssu;
};

/// Mutable, column-oriented staging area filled by loaders and generators.
/// Nothing is checked until it is turned into an AnalysisDataset.
struct DatasetColumns {
    std::vector<std::string> covariate_names;
    std::vector<double> x;  // row-major, rows() * covariate_names.size()
    std::vector<int> source;
    std::vector<std::optional<int>> y;
    std::vector<double> weight;
    std::vector<std::optional<double>> score;
    std::vector<std::optional<std::string>> psu;
    std::vector<std::optional<std::string>> ssu;

    std::size_t rows() const { return source.size(); }
    void push_back(const DataRow& row);
};

struct ValidationIssue {
    ErrorCode code;
    std::size_t row;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::size_t n_rows = 0;
    std::size_t n_target = 0;
    std::map<int, std::size_t> rows_per_source;
    std::map<ErrorCode, std::size_t> violation_counts;
    std::vector<ValidationIssue> issues;  // capped at kMaxIssues, counts are exact

    // Filled after the participation model is fitted: target rows whose raw
    // estimated participation probability is below the clip threshold.
    std::vector<std::size_t> positivity_warnings;
    double positivity_threshold = 0.0;

    static constexpr std::size_t kMaxIssues = 100;
};

ValidationReport validate(const DatasetColumns& columns);

/// Validated, immutable combined dataset (target sample + K source studies).
class AnalysisDataset {
public:
    /// Validates and takes ownership; throws Error with the first violation.
    explicit AnalysisDataset(DatasetColumns columns);

    std::size_t size() const { return cols_.source.size(); }
    std::size_t n_covariates() const { return cols_.covariate_names.size(); }
    int n_studies() const { return n_studies_; }
    const std::vector<std::string>& covariate_names() const { return cols_.covariate_names; }
    std::optional<std::size_t> covariate_index(const std::string& name) const;

    std::span<const double> x_row(std::size_t i) const {
        return {cols_.x.data() + i * n_covariates(), n_covariates()};
    }
    int source(std::size_t i) const { return cols_.source[i]; }
    bool is_target(std::size_t i) const { return cols_.source[i] == 0; }
    bool is_study(std::size_t i) const { return cols_.source[i] != 0; }
    std::optional<int> y(std::size_t i) const { return cols_.y[i]; }
    double weight(std::size_t i) const { return cols_.weight[i]; }
    std::optional<double> score(std::size_t i) const { return cols_.score[i]; }
    const std::optional<std::string>& psu(std::size_t i) const { return cols_.psu[i]; }
    const std::optional<std::string>& ssu(std::size_t i) const { return cols_.ssu[i]; }
    DataRow row(std::size_t i) const;

    std::size_t n_target() const { return n_target_; }
    std::size_t n_study() const { return size() - n_target_; }
    std::size_t n_source(int s) const;
    bool has_scores() const;

    /// Score of row i; throws MissingScore when the row has none.
    double score_or_throw(std::size_t i) const;

    const DatasetColumns& columns() const { return cols_; }

    /// Copy with the score column replaced (e.g. by an evaluated model).
    AnalysisDataset with_scores(std::span<const double> scores) const;
    /// Copy made of the given rows, in the given order (rows may repeat).
    AnalysisDataset select(std::span<const std::size_t> rows) const;

private:
    DatasetColumns cols_;
    std::size_t n_target_ = 0;
    int n_studies_ = 0;
};

/// r_i = 1 iff s_i != 0.
std::vector<int> derive_r(std::span<const int> sources);
std::vector<int> derive_r(const AnalysisDataset& data);

/// Conjunction of simple clauses on (source, r, y, score threshold).
class RowFilter {
public:
    static RowFilter source(int s);
    static RowFilter target();
    static RowFilter study();
    static RowFilter outcome(int y);
    static RowFilter score_above(double c);    // h > c
    static RowFilter score_at_most(double c);  // h <= c

    bool matches(const AnalysisDataset& data, std::size_t i) const;
    RowFilter operator&&(const RowFilter& other) const;

private:
    enum class Kind { Source, R, Y, ScoreAbove, ScoreAtMost };
    struct Clause {
        Kind kind;
        double value;
    };
    std::vector<Clause> clauses_;
};

/// Non-owning index view over a dataset; preserves row order.
class DatasetView {
public:
    explicit DatasetView(const AnalysisDataset& data);
    DatasetView(const AnalysisDataset& data, std::vector<std::size_t> rows)
        : data_(&data), rows_(std::move(rows)) {}

    const AnalysisDataset& data() const { return *data_; }
    const std::vector<std::size_t>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

private:
    const AnalysisDataset* data_;
    std::vector<std::size_t> rows_;
};

DatasetView subset(const AnalysisDataset& data, const RowFilter& filter);
DatasetView subset(const DatasetView& view, const RowFilter& filter);

/// CSV with header: source, y, weight, score, psu, ssu (optional), the rest
/// are covariates in file order.
DatasetColumns read_csv_columns(std::istream& in);
AnalysisDataset load_csv(const std::string& path);

}  // namespace tperf
