// featforge: Bangla-style fake-news feature pipeline CLI.
// Subcommands run individual pipeline stages against a JSON config;
// run-all executes the whole experiment graph with stage caching.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "featforge/experiment.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    long long seed_override = -1;
    bool no_stopwords = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", opts.out_override, "override output directory");
    cmd->add_option("--seed", opts.seed_override, "override split seed");
    cmd->add_flag("--no-stopwords", opts.no_stopwords, "disable stopword removal");
}

featforge::ExperimentConfig load_config(const CommonOpts& opts) {
    auto cfg = featforge::load_experiment_config(opts.config_path);
    if (!opts.out_override.empty()) {
        cfg.output_dir = opts.out_override;
        cfg.raw["output_dir"] = opts.out_override;
    }
    if (opts.seed_override >= 0) {
        cfg.split_seed = static_cast<std::uint64_t>(opts.seed_override);
        cfg.raw["split"]["seed"] = cfg.split_seed;
    }
    if (opts.no_stopwords) {
        cfg.no_stopwords = true;
        cfg.raw["no_stopwords"] = true;
    }
    return cfg;
}

void print_top_combos(const featforge::Pipeline& pipe, int top) {
    std::ifstream is(pipe.out("combinations.csv"));
    std::string line;
    int n = 0;
    while (std::getline(is, line) && n <= top) {
        std::puts(line.c_str());
        ++n;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"featforge: feature extraction, selection and CNN evaluation pipeline"};
    app.require_subcommand(1);

    CommonOpts opts;
    int top = 10;

    auto* prepare = app.add_subcommand("prepare", "load corpus and write splits");
    auto* extract = app.add_subcommand("extract", "extract all configured feature sets");
    auto* select = app.add_subcommand("select", "run feature-selection methods");
    auto* combos = app.add_subcommand("combos", "exhaustive feature-combination test");
    auto* train = app.add_subcommand("train-cnn", "train configured CNN runs");
    auto* report = app.add_subcommand("report", "emit comparison tables");
    auto* run_all = app.add_subcommand("run-all", "run the full pipeline");
    for (auto* cmd : {prepare, extract, select, combos, train, report, run_all})
        add_common(cmd, opts);
    combos->add_option("--top", top, "print the top-N combinations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    featforge::ExperimentConfig cfg;
    try {
        cfg = load_config(opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    try {
        featforge::Pipeline pipe(cfg);
        if (prepare->parsed()) pipe.prepare();
        else if (extract->parsed()) pipe.extract();
        else if (select->parsed()) pipe.select();
        else if (combos->parsed()) {
            pipe.combos();
            print_top_combos(pipe, top);
        } else if (train->parsed()) pipe.train_cnn();
        else if (report->parsed()) pipe.report();
        else if (run_all->parsed()) pipe.run_all();
        pipe.write_manifest();
        for (const auto& st : pipe.manifest().stages)
            std::fprintf(stderr, "%-24s %s (%.2fs)\n", st.name.c_str(),
                         st.cached ? "cached" : "done", st.seconds);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "stage failure: %s\n", e.what());
        return 1;
    }
    return 0;
}
