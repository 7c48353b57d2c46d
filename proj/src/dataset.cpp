#include "tperf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace tperf {

void DatasetColumns::push_back(const DataRow& row) {
    if (covariate_names.size() != row.x.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "row has " + std::to_string(row.x.size()) + " covariates, expected " +
                        std::to_string(covariate_names.size()));
    }
    x.insert(x.end(), row.x.begin(), row.x.end());
    source.push_back(row.source);
    y.push_back(row.y);
    weight.push_back(row.weight);
    score.push_back(row.score);
    psu.push_back(row.psu);
    ssu.push_back(row.ssu);
}

namespace {

void record(ValidationReport& report, ErrorCode code, std::size_t row, std::string message) {
    report.ok = false;
    ++report.violation_counts[code];
    if (report.issues.size() < ValidationReport::kMaxIssues) {
        report.issues.push_back({code, row, std::move(message)});
    }
}

}  // namespace

ValidationReport validate(const DatasetColumns& c) {
    ValidationReport report;
    const std::size_t n = c.rows();
    const std::size_t p = c.covariate_names.size();
    report.n_rows = n;

    if (c.y.size() != n || c.weight.size() != n || c.score.size() != n || c.psu.size() != n ||
        c.ssu.size() != n || c.x.size() != n * p) {
        record(report, ErrorCode::InvalidArgument, 0, "column lengths disagree");
        return report;
    }

    bool any_target_psu = false;
    for (std::size_t i = 0; i < n; ++i) {
        const int s = c.source[i];
        ++report.rows_per_source[s];
        if (s < 0) {
            record(report, ErrorCode::InvalidArgument, i,
                   "row " + std::to_string(i) + ": negative source label");
            continue;
        }
        if (s == 0) {
            ++report.n_target;
            if (c.y[i].has_value()) {
                record(report, ErrorCode::OutcomeOnTarget,
                       i, "row " + std::to_string(i) + ": target row carries an outcome");
            }
            any_target_psu = any_target_psu || c.psu[i].has_value();
        } else if (!c.y[i].has_value()) {
            record(report, ErrorCode::MissingOutcome, i,
                   "row " + std::to_string(i) + ": study row (source " + std::to_string(s) +
                       ") lacks an outcome");
        } else if (*c.y[i] != 0 && *c.y[i] != 1) {
            record(report, ErrorCode::InvalidArgument, i,
                   "row " + std::to_string(i) + ": outcome must be 0 or 1");
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(c.x[i * p + j])) {
                record(report, ErrorCode::NonFiniteCovariate, i,
                       "row " + std::to_string(i) + ": covariate '" + c.covariate_names[j] +
                           "' is missing or non-finite");
                break;
            }
        }
        if (!(c.weight[i] > 0.0) || !std::isfinite(c.weight[i])) {
            record(report, ErrorCode::NonPositiveWeight, i,
                   "row " + std::to_string(i) + ": survey weight must be positive");
        }
        if (c.score[i].has_value() && !std::isfinite(*c.score[i])) {
            record(report, ErrorCode::NonFiniteCovariate, i,
                   "row " + std::to_string(i) + ": score is non-finite");
        }
    }
    if (any_target_psu) {
        for (std::size_t i = 0; i < n; ++i) {
            if (c.source[i] == 0 && !c.psu[i].has_value()) {
                record(report, ErrorCode::MissingPsuLabels, i,
                       "row " + std::to_string(i) + ": psu label missing on a target row");
            }
        }
    }
    if (report.n_target == 0) {
        record(report, ErrorCode::EmptyTarget, 0, "no target rows (source 0)");
    }
    if (report.n_target == n) {
        record(report, ErrorCode::EmptyStudies, 0, "no study rows (source >= 1)");
    }
    return report;
}

AnalysisDataset::AnalysisDataset(DatasetColumns columns) : cols_(std::move(columns)) {
    const ValidationReport report = validate(cols_);
    if (!report.ok) {
        // Structural problems first, so an all-target table reports EmptyStudies.
        for (ErrorCode code : {ErrorCode::EmptyTarget, ErrorCode::EmptyStudies}) {
            if (report.violation_counts.count(code)) {
                for (const auto& issue : report.issues) {
                    if (issue.code == code) throw Error(code, issue.message);
                }
            }
        }
        const auto& first = report.issues.front();
        throw Error(first.code, first.message);
    }
    n_target_ = report.n_target;
    for (int s : cols_.source) n_studies_ = std::max(n_studies_, s);
}

std::optional<std::size_t> AnalysisDataset::covariate_index(const std::string& name) const {
    const auto& names = cols_.covariate_names;
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

DataRow AnalysisDataset::row(std::size_t i) const {
    auto xr = x_row(i);
    return DataRow{{xr.begin(), xr.end()}, cols_.source[i], cols_.y[i], cols_.weight[i],
                   cols_.score[i], cols_.psu[i], cols_.ssu[i]};
}

std::size_t AnalysisDataset::n_source(int s) const {
    return static_cast<std::size_t>(std::count(cols_.source.begin(), cols_.source.end(), s));
}

bool AnalysisDataset::has_scores() const {
    return std::all_of(cols_.score.begin(), cols_.score.end(),
                       [](const auto& v) { return v.has_value(); });
}

double AnalysisDataset::score_or_throw(std::size_t i) const {
    if (!cols_.score[i]) {
        throw Error(ErrorCode::MissingScore, "row " + std::to_string(i) + " has no score");
    }
    return *cols_.score[i];
}

AnalysisDataset AnalysisDataset::with_scores(std::span<const double> scores) const {
    if (scores.size() != size()) {
        throw Error(ErrorCode::InvalidArgument, "score vector length does not match rows");
    }
    DatasetColumns copy = cols_;
    for (std::size_t i = 0; i < scores.size(); ++i) copy.score[i] = scores[i];
    return AnalysisDataset(std::move(copy));
}

AnalysisDataset AnalysisDataset::select(std::span<const std::size_t> rows) const {
    DatasetColumns out;
    out.covariate_names = cols_.covariate_names;
    const std::size_t p = n_covariates();
    out.x.reserve(rows.size() * p);
    for (std::size_t i : rows) {
        auto xr = x_row(i);
        out.x.insert(out.x.end(), xr.begin(), xr.end());
        out.source.push_back(cols_.source[i]);
        out.y.push_back(cols_.y[i]);
        out.weight.push_back(cols_.weight[i]);
        out.score.push_back(cols_.score[i]);
        out.psu.push_back(cols_.psu[i]);
        out.ssu.push_back(cols_.ssu[i]);
    }
    return AnalysisDataset(std::move(out));
}

std::vector<int> derive_r(std::span<const int> sources) {
    std::vector<int> r(sources.size());
    std::transform(sources.begin(), sources.end(), r.begin(), [](int s) { return s != 0 ? 1 : 0; });
    return r;
}

std::vector<int> derive_r(const AnalysisDataset& data) { return derive_r(data.columns().source); }

// ---------------------------------------------------------------------------
// Row filters and views

RowFilter RowFilter::source(int s) {
    RowFilter f;
    f.clauses_.push_back({Kind::Source, static_cast<double>(s)});
    return f;
}
RowFilter RowFilter::target() {
    RowFilter f;
    f.clauses_.push_back({Kind::R, 0.0});
    return f;
}
RowFilter RowFilter::study() {
    RowFilter f;
    f.clauses_.push_back({Kind::R, 1.0});
    return f;
}
RowFilter RowFilter::outcome(int y) {
    RowFilter f;
    f.clauses_.push_back({Kind::Y, static_cast<double>(y)});
    return f;
}
RowFilter RowFilter::score_above(double c) {
    RowFilter f;
    f.clauses_.push_back({Kind::ScoreAbove, c});
    return f;
}
RowFilter RowFilter::score_at_most(double c) {
    RowFilter f;
    f.clauses_.push_back({Kind::ScoreAtMost, c});
    return f;
}

bool RowFilter::matches(const AnalysisDataset& data, std::size_t i) const {
    for (const auto& clause : clauses_) {
        switch (clause.kind) {
            case Kind::Source:
                if (data.source(i) != static_cast<int>(clause.value)) return false;
                break;
            case Kind::R:
                if ((data.is_study(i) ? 1.0 : 0.0) != clause.value) return false;
                break;
            case Kind::Y: {
                auto y = data.y(i);
                if (!y || *y != static_cast<int>(clause.value)) return false;
                break;
            }
            case Kind::ScoreAbove: {
                auto h = data.score(i);
                if (!h || !(*h > clause.value)) return false;
                break;
            }
            case Kind::ScoreAtMost: {
                auto h = data.score(i);
                if (!h || !(*h <= clause.value)) return false;
                break;
            }
        }
    }
    return true;
}

RowFilter RowFilter::operator&&(const RowFilter& other) const {
    RowFilter f = *this;
    f.clauses_.insert(f.clauses_.end(), other.clauses_.begin(), other.clauses_.end());
    return f;
}

DatasetView::DatasetView(const AnalysisDataset& data) : data_(&data), rows_(data.size()) {
    for (std::size_t i = 0; i < rows_.size(); ++i) rows_[i] = i;
}

DatasetView subset(const AnalysisDataset& data, const RowFilter& filter) {
    return subset(DatasetView(data), filter);
}

DatasetView subset(const DatasetView& view, const RowFilter& filter) {
    std::vector<std::size_t> rows;
    for (std::size_t i : view.rows()) {
        if (filter.matches(view.data(), i)) rows.push_back(i);
    }
    return DatasetView(view.data(), std::move(rows));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& text) {
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument(text);
    }
    return value;
}

}  // namespace

DatasetColumns read_csv_columns(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::Csv, "line " + std::to_string(line_no) + ": " + msg);
    };

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) fail("missing header row");
    if (line_no == 1 && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    int col_source = -1, col_y = -1, col_weight = -1, col_score = -1, col_psu = -1, col_ssu = -1;
    std::vector<int> covariate_cols;
    DatasetColumns out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string name = trim(header[j]);
        const int jj = static_cast<int>(j);
        if (name == "source") col_source = jj;
        else if (name == "y") col_y = jj;
        else if (name == "weight") col_weight = jj;
        else if (name == "score") col_score = jj;
        else if (name == "psu") col_psu = jj;
        else if (name == "ssu") col_ssu = jj;
        else {
            if (name.empty()) fail("empty column name at position " + std::to_string(j + 1));
            covariate_cols.push_back(jj);
            out.covariate_names.push_back(name);
        }
    }
    if (col_source < 0) fail("required column 'source' not found");

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            fail("expected " + std::to_string(header.size()) + " fields, found " +
                 std::to_string(fields.size()));
        }
        for (auto& f : fields) f = trim(f);
        DataRow row;
        try {
            auto s = parse_double(fields[col_source]);
            if (!s || *s != std::floor(*s) || *s < 0) fail("source must be an integer >= 0");
            row.source = static_cast<int>(*s);
            if (col_y >= 0) {
                auto y = parse_double(fields[col_y]);
                if (y) {
                    if (*y != 0.0 && *y != 1.0) fail("y must be 0, 1 or empty");
                    row.y = static_cast<int>(*y);
                }
            }
            if (col_weight >= 0) row.weight = parse_double(fields[col_weight]).value_or(1.0);
            if (col_score >= 0) row.score = parse_double(fields[col_score]);
            if (col_psu >= 0 && !fields[col_psu].empty()) row.psu = fields[col_psu];
            if (col_ssu >= 0 && !fields[col_ssu].empty()) row.ssu = fields[col_ssu];
            row.x.reserve(covariate_cols.size());
            for (int j : covariate_cols) {
                row.x.push_back(parse_double(fields[j]).value_or(std::nan("")));
            }
        } catch (const std::invalid_argument& e) {
            fail(std::string("not a number: '") + e.what() + "'");
        }
        out.push_back(row);
    }
    return out;
}

AnalysisDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Csv, "cannot open '" + path + "'");
    return AnalysisDataset(read_csv_columns(in));
}

}  // namespace tperf
