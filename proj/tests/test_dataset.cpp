#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "tperf/dataset.hpp"

using namespace tperf;

namespace {

DataRow target_row(double x = 0.0) {
    DataRow r;
    r.x = {x};
    r.source = 0;
    return r;
}

DataRow study_row(int s, std::optional<int> y, double x = 0.0) {
    DataRow r;
    r.x = {x};
    r.source = s;
    r.y = y;
    return r;
}

DatasetColumns columns(std::initializer_list<DataRow> rows) {
    DatasetColumns c;
    c.covariate_names = {"x1"};
    for (const auto& r : rows) c.push_back(r);
    return c;
}

ErrorCode thrown_code(DatasetColumns c) {
    try {
        AnalysisDataset d(std::move(c));
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Config;
}

}  // namespace

TEST_CASE("minimal valid dataset passes validation") {
    const auto report = validate(columns({target_row(), study_row(1, 1)}));
    CHECK(report.ok);
    CHECK(report.n_target == 1);
    CHECK(report.rows_per_source.at(1) == 1);
    AnalysisDataset d(columns({target_row(), study_row(1, 1)}));
    CHECK(d.n_target() == 1);
    CHECK(d.n_studies() == 1);
}

TEST_CASE("structural violations are reported by code") {
    CHECK(thrown_code(columns({target_row(), target_row()})) == ErrorCode::EmptyStudies);
    CHECK(thrown_code(columns({study_row(1, 0)})) == ErrorCode::EmptyTarget);

    auto c = columns({target_row(), study_row(1, 1), study_row(2, std::nullopt)});
    const auto report = validate(c);
    CHECK_FALSE(report.ok);
    REQUIRE(report.issues.size() == 1);
    CHECK(report.issues[0].code == ErrorCode::MissingOutcome);
    CHECK(report.issues[0].row == 2);
    CHECK(thrown_code(c) == ErrorCode::MissingOutcome);

    auto leak = target_row();
    leak.y = 1;
    CHECK(thrown_code(columns({leak, study_row(1, 1)})) == ErrorCode::OutcomeOnTarget);

    CHECK(thrown_code(columns({target_row(std::nan("")), study_row(1, 1)})) ==
          ErrorCode::NonFiniteCovariate);

    auto heavy = target_row();
    heavy.weight = 0.0;
    CHECK(thrown_code(columns({heavy, study_row(1, 1)})) == ErrorCode::NonPositiveWeight);

    auto labelled = target_row();
    labelled.psu = "a";
    CHECK(thrown_code(columns({labelled, target_row(), study_row(1, 1)})) ==
          ErrorCode::MissingPsuLabels);
}

TEST_CASE("violation counts are exact") {
    auto c = columns({target_row(), study_row(1, std::nullopt), study_row(1, std::nullopt),
                      study_row(2, 1)});
    const auto report = validate(c);
    CHECK(report.violation_counts.at(ErrorCode::MissingOutcome) == 2);
}

TEST_CASE("derive_r follows the source label") {
    CHECK(derive_r(std::vector<int>{0, 1, 3, 0}) == std::vector<int>{0, 1, 1, 0});
    CHECK(derive_r(std::vector<int>{0, 0}) == std::vector<int>{0, 0});
    CHECK(derive_r(std::vector<int>{2}) == std::vector<int>{1});
    const auto once = derive_r(std::vector<int>{0, 1, 3, 0});
    CHECK(derive_r(once) == once);
}

TEST_CASE("subset views preserve order and compose") {
    AnalysisDataset d(columns({target_row(1), study_row(1, 1, 2), target_row(3),
                               study_row(2, 0, 4)}));
    const auto targets = subset(d, RowFilter::target());
    CHECK(targets.rows() == std::vector<std::size_t>{0, 2});
    const auto cases = subset(d, RowFilter::study() && RowFilter::outcome(1));
    CHECK(cases.rows() == std::vector<std::size_t>{1});
    CHECK(subset(d, RowFilter::source(7)).empty());

    auto f = testing_support::random_fixture(3, 6, 10);
    const auto p = RowFilter::study();
    const auto q = RowFilter::score_above(0.4);
    CHECK(subset(subset(f.data, p), q).rows() == subset(f.data, p && q).rows());
    CHECK(subset(subset(f.data, q), RowFilter::score_at_most(0.7)).rows() ==
          subset(f.data, q && RowFilter::score_at_most(0.7)).rows());
}

TEST_CASE("csv reader parses the documented columns") {
    std::istringstream in(
        "\xEF\xBB\xBFsource,y,weight,score,psu,ssu,age,\"bmi\"\n"
        "0,,2.5,0.1,p1,s1,60,25.5\n"
        "0,,,0.2,p2,s1,61,30\n"
        "1,1,,0.7,,,55,22\n");
    auto cols = read_csv_columns(in);
    CHECK(cols.covariate_names == std::vector<std::string>{"age", "bmi"});
    AnalysisDataset d(std::move(cols));
    CHECK(d.size() == 3);
    CHECK(d.weight(0) == 2.5);
    CHECK(d.weight(1) == 1.0);
    CHECK(*d.y(2) == 1);
    CHECK(*d.psu(1) == "p2");
    CHECK(d.x_row(0)[1] == 25.5);
    CHECK(*d.covariate_index("bmi") == 1);
}

TEST_CASE("csv errors carry the line number") {
    std::istringstream in("source,y,x1\n0,,1\n1,1,abc\n");
    try {
        read_csv_columns(in);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Csv);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("select and with_scores build new validated datasets") {
    auto f = testing_support::random_fixture(5, 4, 6);
    std::vector<std::size_t> rows{0, 0, 5, 6};
    const auto s = f.data.select(rows);
    CHECK(s.size() == 4);
    CHECK(s.n_target() == 2);
    std::vector<double> scores(f.data.size(), 0.25);
    CHECK(*f.data.with_scores(scores).score(3) == 0.25);
}
