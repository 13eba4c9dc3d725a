#include <doctest.h>

#include <string>
#include <vector>

#include "helpers.hpp"
#include "repofim/metrics.hpp"

using namespace repofim;

namespace {

// Independent full-matrix Levenshtein oracle; kept deliberately separate
// from the two-row implementation under test.
size_t levenshtein_oracle(const std::string& a, const std::string& b) {
    std::vector<std::vector<size_t>> d(a.size() + 1, std::vector<size_t>(b.size() + 1, 0));
    for (size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (size_t i = 1; i <= a.size(); ++i)
        for (size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

// Exhaustive pass@k oracle: enumerate every k-subset of n samples where the
// first c are the passing ones.
double pass_at_k_oracle(uint64_t n, uint64_t c, uint64_t k) {
    uint64_t total = 0, hit = 0;
    for (uint64_t mask = 0; mask < (1ull << n); ++mask) {
        if (static_cast<uint64_t>(__builtin_popcountll(mask)) != k) continue;
        ++total;
        if (mask & ((1ull << c) - 1)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

std::string random_string(Rng& rng, size_t max_len, int alphabet) {
    size_t len = rng.below(max_len + 1);
    std::string s(len, 'a');
    for (auto& ch : s) ch = static_cast<char>('a' + rng.below(static_cast<uint64_t>(alphabet)));
    return s;
}

ScoreRecord rec(const std::string& id, MaskLevel level, double es, OutcomeStatus status) {
    return {id, level, "python", es, es == 100.0, status};
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("edit similarity basics") {
    CHECK(edit_similarity("abc", "abc") == doctest::Approx(100.0));
    CHECK(edit_similarity("abc", "abd") == doctest::Approx(100.0 * (1.0 - 1.0 / 3.0)));
    CHECK(edit_similarity("", "abc") == doctest::Approx(0.0));
    CHECK(edit_similarity("", "") == doctest::Approx(100.0));
}

TEST_CASE("levenshtein matches the dp oracle on random pairs") {
    Rng rng(2024);
    for (int i = 0; i < 300; ++i) {
        auto a = random_string(rng, 60, 4);
        auto b = random_string(rng, 60, 4);
        CHECK(levenshtein_distance(a, b) == levenshtein_oracle(a, b));
    }
}

TEST_CASE("edit similarity is symmetric") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        auto a = random_string(rng, 40, 6);
        auto b = random_string(rng, 40, 6);
        CHECK(edit_similarity(a, b) == doctest::Approx(edit_similarity(b, a)));
    }
}

TEST_CASE("pass@k basics") {
    CHECK(pass_at_k(1, 1, 1) == doctest::Approx(1.0));
    CHECK(pass_at_k(1, 0, 1) == doctest::Approx(0.0));
    CHECK(pass_at_k(5, 2, 3) == doctest::Approx(0.9));
    CHECK(pass_at_k(8, 8, 1) == doctest::Approx(1.0));
}

TEST_CASE("pass@k equals exhaustive enumeration for all n <= 8") {
    for (uint64_t n = 1; n <= 8; ++n)
        for (uint64_t c = 0; c <= n; ++c)
            for (uint64_t k = 1; k <= n; ++k) {
                INFO("n=" << n << " c=" << c << " k=" << k);
                CHECK(std::abs(pass_at_k(n, c, k) - pass_at_k_oracle(n, c, k)) < 1e-12);
            }
}

TEST_CASE("pass@k is monotone in c and k") {
    for (uint64_t n = 1; n <= 8; ++n)
        for (uint64_t k = 1; k <= n; ++k)
            for (uint64_t c = 1; c <= n; ++c)
                CHECK(pass_at_k(n, c, k) >= pass_at_k(n, c - 1, k));
    for (uint64_t n = 2; n <= 8; ++n)
        for (uint64_t c = 0; c <= n; ++c)
            for (uint64_t k = 2; k <= n; ++k)
                CHECK(pass_at_k(n, c, k) >= pass_at_k(n, c, k - 1));
}

TEST_CASE("pass@k precondition violations throw") {
    CHECK_THROWS_AS(pass_at_k(3, 4, 1), ContractError);
    CHECK_THROWS_AS(pass_at_k(3, 1, 0), ContractError);
    CHECK_THROWS_AS(pass_at_k(3, 1, 4), ContractError);
}

TEST_CASE("aggregate: all passing with exact middles") {
    std::vector<ScoreRecord> scores;
    int id = 0;
    for (auto level : default_benchmark_levels())
        for (int i = 0; i < 3; ++i)
            scores.push_back(rec("t" + std::to_string(id++), level, 100.0, OutcomeStatus::Pass));
    auto report = aggregate_report(scores);
    REQUIRE(report.rows.size() == 6);
    for (const auto& row : report.rows) {
        CHECK(row.count == 3);
        CHECK(row.mean_es == doctest::Approx(100.0));
        CHECK(row.pass_at_1 == doctest::Approx(100.0));
    }
    CHECK(report.average.mean_es == doctest::Approx(100.0));
    CHECK(report.average.pass_at_1 == doctest::Approx(100.0));
}

TEST_CASE("aggregate: 2 of 4 passing is 50.0") {
    std::vector<ScoreRecord> scores;
    scores.push_back(rec("a", MaskLevel::Expression, 100.0, OutcomeStatus::Pass));
    scores.push_back(rec("b", MaskLevel::Expression, 100.0, OutcomeStatus::Pass));
    scores.push_back(rec("c", MaskLevel::Expression, 10.0, OutcomeStatus::Fail));
    scores.push_back(rec("d", MaskLevel::Expression, 20.0, OutcomeStatus::Timeout));
    auto report = aggregate_report(scores);
    const ReportRow* row = nullptr;
    for (const auto& r : report.rows)
        if (r.key == "expression") row = &r;
    REQUIRE(row);
    CHECK(row->count == 4);
    CHECK(row->pass_at_1 == doctest::Approx(50.0));
}

TEST_CASE("macro average ignores per-category counts") {
    std::vector<ScoreRecord> scores;
    double values[] = {10, 20, 30, 40, 50, 60};
    int id = 0;
    size_t counts[] = {1, 2, 3, 10, 20, 50}; // very unbalanced
    auto levels = default_benchmark_levels();
    for (size_t g = 0; g < 6; ++g)
        for (size_t i = 0; i < counts[g]; ++i)
            scores.push_back(rec("t" + std::to_string(id++), levels[g], values[g],
                                 OutcomeStatus::Fail));
    auto report = aggregate_report(scores);
    CHECK(report.average.mean_es == doctest::Approx(35.0));
    // micro average would be count-weighted instead
    ReportOptions micro;
    micro.average_mode = AverageMode::Micro;
    auto micro_report = aggregate_report(scores, micro);
    CHECK(micro_report.average.mean_es > 35.0);
}

TEST_CASE("generation errors count as failures but not in ES; harness errors excluded") {
    std::vector<ScoreRecord> scores;
    scores.push_back(rec("a", MaskLevel::Statement, 100.0, OutcomeStatus::Pass));
    scores.push_back(rec("b", MaskLevel::Statement, 0.0, OutcomeStatus::GenerationError));
    scores.push_back(rec("c", MaskLevel::Statement, 50.0, OutcomeStatus::HarnessError));
    auto report = aggregate_report(scores);
    const ReportRow* row = nullptr;
    for (const auto& r : report.rows)
        if (r.key == "statement") row = &r;
    REQUIRE(row);
    CHECK(row->count == 2);          // harness error excluded
    CHECK(row->harness_errors == 1); // reported separately
    CHECK(row->pass_at_1 == doctest::Approx(50.0)); // 1 pass of 2
    CHECK(row->mean_es == doctest::Approx(100.0));  // generation error not in ES mean
}

TEST_CASE("grouping by language") {
    std::vector<ScoreRecord> scores;
    scores.push_back({"a", MaskLevel::Expression, "python", 80.0, false, OutcomeStatus::Pass});
    scores.push_back({"b", MaskLevel::Statement, "java", 60.0, false, OutcomeStatus::Fail});
    ReportOptions opts;
    opts.group_by = ReportGroupBy::Language;
    auto report = aggregate_report(scores, opts);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].key == "java");
    CHECK(report.rows[1].key == "python");
}

TEST_CASE("stats: single task row has min == max == mean") {
    MaskTask t;
    t.task_id = "only";
    t.level = MaskLevel::Statement;
    t.prefix = "a b";
    t.middle = "c d e";
    t.suffix = "f";
    t.middle_token_count = 3;
    ApproxTokenizer tok;
    auto table = dataset_stats({t}, {{"only", 7}}, tok);
    REQUIRE(table.rows.size() == 1);
    const auto& row = table.rows[0];
    CHECK(row.count == 1);
    CHECK(row.context_tokens.min == 7);
    CHECK(row.context_tokens.max == 7);
    CHECK(row.context_tokens.mean == doctest::Approx(7.0));
    CHECK(format_stat_cell(row.middle_tokens) == "3/3/3.0");
}

TEST_CASE("stats: hand-computed expression row") {
    std::vector<MaskTask> tasks;
    size_t middles[] = {2, 13, 150};
    for (size_t i = 0; i < 3; ++i) {
        MaskTask t;
        t.task_id = "e" + std::to_string(i);
        t.level = MaskLevel::Expression;
        t.middle_token_count = middles[i];
        tasks.push_back(t);
    }
    ApproxTokenizer tok;
    auto table = dataset_stats(tasks, {}, tok);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].category == "expression");
    CHECK(format_stat_cell(table.rows[0].middle_tokens) == "2/150/55.0");
}

TEST_CASE("stats: empty categories are omitted and large values abbreviate") {
    ApproxTokenizer tok;
    CHECK(dataset_stats({}, {}, tok).rows.empty());
    StatsSummary s;
    s.min = 0;
    s.max = 39000;
    s.mean = 1300.0;
    CHECK(format_stat_cell(s) == "0/39.0K/1.3K");
}

} // TEST_SUITE
