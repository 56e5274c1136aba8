// krylovmp: command-line runner for mixed-precision PCG experiments.
//
//   krylovmp run          --config cfg [--out trace.csv] [overrides]
//   krylovmp compare-saad --config cfg [--out stem]
//   krylovmp sweep        --config cfg [--out heatmap.csv]
//
// Exit codes: 0 success, 1 configuration error, 2 solver breakdown.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "krylovmp/config.hpp"
#include "krylovmp/experiment.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string out;
    std::string mode;
    std::string fmt_s, fmt_q, fmt_z, fmt_l, fmt_r;
    std::size_t maxiter = 0;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "configuration file (key = value lines)");
    cmd->add_option("--out", o.out, "output path");
    cmd->add_option("--maxiter", o.maxiter, "maximum number of iterations");
    cmd->add_option("--mode", o.mode, "none|left|right|split|saad-split");
    cmd->add_option("--fmt-s", o.fmt_s, "format of the M_L^-1 application");
    cmd->add_option("--fmt-q", o.fmt_q, "format of the M_R^-1 application");
    cmd->add_option("--fmt-z", o.fmt_z, "format of the M_R^-T application");
    cmd->add_option("--fmt-l", o.fmt_l, "left format for saad-split, compare-saad and sweep");
    cmd->add_option("--fmt-r", o.fmt_r, "right format for saad-split, compare-saad and sweep");
}

krylovmp::ExperimentConfig resolve(const Overrides& o) {
    std::string text;
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) throw krylovmp::ConfigError("--config", "cannot read '" + o.config_path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }
    krylovmp::ExperimentConfig cfg = krylovmp::parse_config(text);
    auto set = [&cfg](const char* key, const std::string& v) {
        if (!v.empty()) krylovmp::apply_config_entry(cfg, key, v);
    };
    set("output", o.out);
    set("scheme.mode", o.mode);
    set("fmt.s", o.fmt_s);
    set("fmt.q", o.fmt_q);
    set("fmt.z", o.fmt_z);
    set("fmt.L", o.fmt_l);
    set("fmt.R", o.fmt_r);
    if (o.maxiter != 0) set("maxiter", std::to_string(o.maxiter));
    krylovmp::validate_config(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixed-precision preconditioned conjugate gradient experiments"};
    app.require_subcommand(1);
    Overrides o;
    auto* run = app.add_subcommand("run", "run one solver configuration and write its trace");
    auto* cmp = app.add_subcommand("compare-saad", "compare the unified and the classical split recurrences");
    auto* sweep = app.add_subcommand("sweep", "run split PCG over all pairs of application formats");
    for (auto* c : {run, cmp, sweep}) add_common(c, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : krylovmp::exit_config_error;
    }

    try {
        const krylovmp::ExperimentConfig cfg = resolve(o);
        if (run->parsed()) {
            const int rc = krylovmp::cmd_run(cfg);
            if (rc == krylovmp::exit_breakdown) std::cerr << "solver breakdown; trace written to " << cfg.output << '\n';
            return rc;
        }
        if (cmp->parsed()) {
            const auto res = krylovmp::cmd_compare_saad(cfg);
            std::cout << res.summary << '\n';
            return res.exit_code;
        }
        return krylovmp::cmd_sweep(cfg);
    } catch (const krylovmp::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return krylovmp::exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return krylovmp::exit_config_error;
    }
}
