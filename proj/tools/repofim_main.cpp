// repofim: turn repositories with runnable test suites into executable
// fill-in-the-middle benchmarks, evaluate completion endpoints against them,
// and emit instruction-tuning corpora.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "repofim/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
};

int load_or_fail(const CommonArgs& args, repofim::PipelineConfig& cfg) {
    auto loaded = repofim::load_config(args.config_path);
    if (!loaded.ok()) {
        std::cerr << "config validation failed:\n";
        for (const auto& e : loaded.errors) std::cerr << "  - " << e << "\n";
        return 2;
    }
    cfg = std::move(loaded.config);
    if (args.seed_set) {
        cfg.seed = args.seed;
        cfg.config_hash = repofim::hash_combine(cfg.config_hash, cfg.seed);
    }
    return 0;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        auto part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!part.empty()) out.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"executable fill-in-the-middle benchmark toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    repofim::StageOptions options;
    std::string stages_csv;
    std::string group_by = "level";
    std::string avg_mode = "macro";
    size_t decontam_n = 0;
    std::string index_dir;
    bool rebuild_index = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "pipeline config file (JSON)")
            ->required();
        cmd->add_option("--seed", common.seed, "override the config's global seed")
            ->each([&](const std::string&) { common.seed_set = true; });
    };

    auto* ingest = app.add_subcommand("ingest", "snapshot the configured repositories");
    add_common(ingest);

    auto* generate = app.add_subcommand("generate", "carve mask tasks and pack context");
    add_common(generate);

    auto* decontaminate =
        app.add_subcommand("decontaminate", "drop tasks overlapping the reference n-gram index");
    add_common(decontaminate);
    decontaminate->add_option("--n", decontam_n, "n-gram size (default from config, 20)");
    decontaminate->add_option("--index", index_dir, "directory holding the fingerprint index");
    decontaminate->add_flag("--rebuild-index", rebuild_index,
                            "rebuild the index from the reference corpora");

    auto* evaluate = app.add_subcommand("evaluate", "run completions through the sandbox");
    add_common(evaluate);
    evaluate->add_option("--endpoint", options.endpoint,
                         "endpoint profile name, or 'oracle' for ground-truth middles");
    evaluate->add_flag("--keep-workdirs", options.keep_workdirs,
                       "retain sandbox working directories for debugging");

    auto* report = app.add_subcommand("report", "aggregate results into the category table");
    add_common(report);
    report->add_option("--endpoint", options.endpoint, "which results file to aggregate");
    report->add_option("--group-by", group_by, "level|language");
    report->add_option("--avg", avg_mode, "macro|micro");

    auto* corpus = app.add_subcommand("corpus", "emit the instruction-tuning corpus JSONL");
    add_common(corpus);

    auto* stats = app.add_subcommand("stats", "dataset statistics table");
    add_common(stats);

    auto* run = app.add_subcommand("run", "run the pipeline (all stages or --stages subset)");
    add_common(run);
    run->add_option("--stages", stages_csv, "comma-separated stage subset, pipeline order");
    run->add_option("--endpoint", options.endpoint, "endpoint profile for evaluate/report");
    run->add_flag("--keep-workdirs", options.keep_workdirs, "retain sandbox directories");
    run->add_option("--group-by", group_by, "level|language");
    run->add_option("--avg", avg_mode, "macro|micro");

    CLI11_PARSE(app, argc, argv);

    if (group_by == "language")
        options.report.group_by = repofim::ReportGroupBy::Language;
    else if (group_by != "level") {
        std::cerr << "error: --group-by must be level or language\n";
        return 2;
    }
    if (avg_mode == "micro")
        options.report.average_mode = repofim::AverageMode::Micro;
    else if (avg_mode != "macro") {
        std::cerr << "error: --avg must be macro or micro\n";
        return 2;
    }

    repofim::PipelineConfig cfg;
    if (int rc = load_or_fail(common, cfg); rc != 0) return rc;

    try {
        if (ingest->parsed()) return repofim::run_pipeline(cfg, {"ingest"}, options);
        if (generate->parsed()) return repofim::run_pipeline(cfg, {"generate"}, options);
        if (decontaminate->parsed()) {
            try {
                repofim::stage_decontaminate(cfg, decontam_n, index_dir, rebuild_index);
                return 0;
            } catch (const repofim::MissingArtifactError& e) {
                std::cerr << "error: " << e.what() << " (run generate first)\n";
                return 2;
            }
        }
        if (evaluate->parsed()) return repofim::run_pipeline(cfg, {"evaluate"}, options);
        if (report->parsed()) return repofim::run_pipeline(cfg, {"report"}, options);
        if (corpus->parsed()) return repofim::run_pipeline(cfg, {"corpus"}, options);
        if (stats->parsed()) return repofim::run_pipeline(cfg, {"stats"}, options);
        if (run->parsed()) return repofim::run_pipeline(cfg, split_csv(stages_csv), options);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
