#pragma once

// Scoring & aggregation: character-level edit similarity on a 0-100 scale,
// the unbiased Pass@k estimator, the per-category evaluation report and the
// dataset statistics table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repofim/context.hpp"
#include "repofim/mask.hpp"
#include "repofim/util.hpp"

namespace repofim {

// ---------------------------------------------------------------------------
// Edit similarity

inline size_t levenshtein_distance(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    const size_t rows = b.size();
    std::vector<size_t> row(rows + 1);
    for (size_t j = 0; j <= rows; ++j) row[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        size_t diag = row[0];
        row[0] = i;
        for (size_t j = 1; j <= rows; ++j) {
            size_t saved = row[j];
            size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
            diag = saved;
        }
    }
    return row[rows];
}

// 100 * (1 - distance / max(|a|, |b|)); two empty strings score 100.
inline double edit_similarity(std::string_view generated, std::string_view reference) {
    if (generated.empty() && reference.empty()) return 100.0;
    size_t dist = levenshtein_distance(generated, reference);
    size_t denom = std::max(generated.size(), reference.size());
    return 100.0 * (1.0 - static_cast<double>(dist) / static_cast<double>(denom));
}

// ---------------------------------------------------------------------------
// Pass@k

// Unbiased estimator 1 - C(n-c, k) / C(n, k), evaluated in product form.
inline double pass_at_k(uint64_t n, uint64_t c, uint64_t k) {
    if (c > n) throw ContractError("pass_at_k: c must satisfy 0 <= c <= n");
    if (k < 1 || k > n) throw ContractError("pass_at_k: k must satisfy 1 <= k <= n");
    if (n - c < k) return 1.0;
    double prod = 1.0;
    for (uint64_t i = n - c + 1; i <= n; ++i)
        prod *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
    return 1.0 - prod;
}

// ---------------------------------------------------------------------------
// Evaluation report

enum class OutcomeStatus {
    Pass,
    Fail,
    Timeout,
    GenerationError,
    HarnessError,
};

inline std::string to_string(OutcomeStatus s) {
    switch (s) {
        case OutcomeStatus::Pass: return "pass";
        case OutcomeStatus::Fail: return "fail";
        case OutcomeStatus::Timeout: return "timeout";
        case OutcomeStatus::GenerationError: return "generation_error";
        case OutcomeStatus::HarnessError: return "harness_error";
    }
    return "harness_error";
}

inline std::optional<OutcomeStatus> outcome_from_string(std::string_view s) {
    if (s == "pass") return OutcomeStatus::Pass;
    if (s == "fail") return OutcomeStatus::Fail;
    if (s == "timeout") return OutcomeStatus::Timeout;
    if (s == "generation_error") return OutcomeStatus::GenerationError;
    if (s == "harness_error") return OutcomeStatus::HarnessError;
    return std::nullopt;
}

struct ScoreRecord {
    std::string task_id;
    MaskLevel level = MaskLevel::Expression;
    std::string language;
    double es = 0.0; // [0, 100]
    bool exact = false;
    OutcomeStatus status = OutcomeStatus::Fail;
};

enum class AverageMode { Macro, Micro };
enum class ReportGroupBy { Level, Language };

struct ReportRow {
    std::string key; // level or language name
    size_t count = 0;          // scored tasks (HarnessError excluded)
    size_t harness_errors = 0; // reported separately
    double mean_es = 0.0;      // over tasks with a usable generation
    double pass_at_1 = 0.0;    // percentage
};

struct Report {
    std::vector<ReportRow> rows;
    ReportRow average; // across rows with count > 0
    AverageMode average_mode = AverageMode::Macro;
    ReportGroupBy group_by = ReportGroupBy::Level;
    std::map<std::string, std::string> metadata;
};

struct ReportOptions {
    AverageMode average_mode = AverageMode::Macro;
    ReportGroupBy group_by = ReportGroupBy::Level;
    bool include_class_level = false; // class masks are outside the default profile
};

inline Report aggregate_report(const std::vector<ScoreRecord>& scores,
                               const ReportOptions& options = {}) {
    Report report;
    report.average_mode = options.average_mode;
    report.group_by = options.group_by;

    // Fixed category order for levels; lexicographic for languages.
    std::vector<std::string> keys;
    if (options.group_by == ReportGroupBy::Level) {
        for (auto level : default_benchmark_levels()) keys.push_back(to_string(level));
        if (options.include_class_level) keys.push_back(to_string(MaskLevel::Class));
        for (const auto& s : scores) {
            auto k = to_string(s.level);
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
        }
    } else {
        for (const auto& s : scores)
            if (std::find(keys.begin(), keys.end(), s.language) == keys.end())
                keys.push_back(s.language);
        std::sort(keys.begin(), keys.end());
    }

    // Deterministic accumulation: records sorted by task_id within a group.
    std::vector<const ScoreRecord*> ordered;
    ordered.reserve(scores.size());
    for (const auto& s : scores) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const ScoreRecord* a, const ScoreRecord* b) { return a->task_id < b->task_id; });

    for (const auto& key : keys) {
        ReportRow row;
        row.key = key;
        double es_sum = 0.0;
        size_t es_count = 0;
        size_t passes = 0;
        for (const auto* s : ordered) {
            std::string k = options.group_by == ReportGroupBy::Level ? to_string(s->level)
                                                                     : s->language;
            if (k != key) continue;
            if (s->status == OutcomeStatus::HarnessError) {
                ++row.harness_errors;
                continue;
            }
            ++row.count;
            if (s->status == OutcomeStatus::Pass) ++passes;
            if (s->status != OutcomeStatus::GenerationError) {
                es_sum += s->es;
                ++es_count;
            }
        }
        row.mean_es = es_count ? es_sum / static_cast<double>(es_count) : 0.0;
        row.pass_at_1 = row.count ? 100.0 * static_cast<double>(passes) /
                                        static_cast<double>(row.count)
                                  : 0.0;
        report.rows.push_back(row);
    }

    ReportRow avg;
    avg.key = "average";
    if (options.average_mode == AverageMode::Macro) {
        double es_sum = 0.0, p1_sum = 0.0;
        size_t groups = 0;
        for (const auto& row : report.rows) {
            avg.count += row.count;
            avg.harness_errors += row.harness_errors;
            if (row.count == 0) continue;
            es_sum += row.mean_es;
            p1_sum += row.pass_at_1;
            ++groups;
        }
        avg.mean_es = groups ? es_sum / static_cast<double>(groups) : 0.0;
        avg.pass_at_1 = groups ? p1_sum / static_cast<double>(groups) : 0.0;
    } else {
        double es_sum = 0.0;
        size_t es_count = 0, passes = 0;
        for (const auto* s : ordered) {
            if (s->status == OutcomeStatus::HarnessError) {
                ++avg.harness_errors;
                continue;
            }
            ++avg.count;
            if (s->status == OutcomeStatus::Pass) ++passes;
            if (s->status != OutcomeStatus::GenerationError) {
                es_sum += s->es;
                ++es_count;
            }
        }
        avg.mean_es = es_count ? es_sum / static_cast<double>(es_count) : 0.0;
        avg.pass_at_1 = avg.count ? 100.0 * static_cast<double>(passes) /
                                        static_cast<double>(avg.count)
                                  : 0.0;
    }
    report.average = avg;
    return report;
}

// ---------------------------------------------------------------------------
// Dataset statistics (per-category token count rows)

struct StatsSummary {
    size_t min = 0;
    size_t max = 0;
    double mean = 0.0;

    static StatsSummary of(const std::vector<size_t>& values) {
        StatsSummary s;
        if (values.empty()) return s;
        s.min = *std::min_element(values.begin(), values.end());
        s.max = *std::max_element(values.begin(), values.end());
        double sum = 0.0;
        for (size_t v : values) sum += static_cast<double>(v);
        s.mean = sum / static_cast<double>(values.size());
        return s;
    }
};

struct StatsRow {
    std::string category;
    size_t count = 0;
    StatsSummary context_tokens;
    StatsSummary prefix_tokens;
    StatsSummary middle_tokens;
    StatsSummary suffix_tokens;
};

struct StatsTable {
    std::vector<StatsRow> rows; // categories with count > 0, benchmark order
    std::string tokenizer_name;
};

// Formats one summary cell as min/max/mean; values >= 1000 are abbreviated
// with a K suffix (one decimal), means always carry one decimal.
inline std::string format_stat_value(double v, bool is_mean) {
    char buf[32];
    if (v >= 1000.0) {
        std::snprintf(buf, sizeof(buf), "%.1fK", v / 1000.0);
    } else if (is_mean) {
        std::snprintf(buf, sizeof(buf), "%.1f", v);
    } else {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
    }
    return buf;
}

inline std::string format_stat_cell(const StatsSummary& s) {
    return format_stat_value(static_cast<double>(s.min), false) + "/" +
           format_stat_value(static_cast<double>(s.max), false) + "/" +
           format_stat_value(s.mean, true);
}

// `context_tokens_by_task` maps task_id to its packed context size; tasks
// without an entry count as zero context.
inline StatsTable dataset_stats(const std::vector<MaskTask>& tasks,
                                const std::map<std::string, size_t>& context_tokens_by_task,
                                const Tokenizer& tokenizer) {
    StatsTable table;
    table.tokenizer_name = tokenizer.name();
    for (auto level : all_mask_levels()) {
        std::vector<size_t> ctx, pre, mid, suf;
        for (const auto& t : tasks) {
            if (t.level != level) continue;
            auto it = context_tokens_by_task.find(t.task_id);
            ctx.push_back(it == context_tokens_by_task.end() ? 0 : it->second);
            pre.push_back(tokenizer.count(t.prefix));
            mid.push_back(t.middle_token_count);
            suf.push_back(tokenizer.count(t.suffix));
        }
        if (ctx.empty()) continue; // empty categories are omitted
        StatsRow row;
        row.category = to_string(level);
        row.count = ctx.size();
        row.context_tokens = StatsSummary::of(ctx);
        row.prefix_tokens = StatsSummary::of(pre);
        row.middle_tokens = StatsSummary::of(mid);
        row.suffix_tokens = StatsSummary::of(suf);
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace repofim
