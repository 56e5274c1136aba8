#pragma once

// Experiment drivers behind the command-line tool: build the problem from a
// config, run the solver, evaluate bound overlays and write CSV.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "krylovmp/bounds.hpp"
#include "krylovmp/config.hpp"
#include "krylovmp/linalg.hpp"
#include "krylovmp/pcg.hpp"
#include "krylovmp/problems.hpp"

namespace krylovmp {

inline constexpr const char* run_csv_header =
    "k,alpha,beta,norm_rhat,norm_true_residual,residual_gap,a_norm_error,f_value,local_orth,norm_x,"
    "backward_bound,forward_bound,assumption_lhs,status";

inline constexpr const char* sweep_csv_header =
    "fmt_L,fmt_R,best_k,relative_forward_error_Anorm,relative_backward_error,status";

enum ExitCode : int { exit_ok = 0, exit_config_error = 1, exit_breakdown = 2 };

/// The assembled linear system and preconditioner for one experiment.
struct Problem {
    SpdMatrix a;
    Vector b;
    SpdMatrix m;
    LowerTriangular factor;
    Vector x_ref;
    double norm_a = 0.0;
    double norm_b = 0.0;
    double norm_xref = 0.0;
    double a_norm_xref = 0.0;

    static Problem build(const ExperimentConfig& cfg) {
        const SpdMatrix a = build_matrix(cfg.problem);
        const SpdMatrix m = cfg.preconditioner == PreconditionerKind::identity
                                ? SpdMatrix::identity(cfg.problem.n)
                                : build_preconditioner(cfg.problem, a);
        Vector b = build_rhs(cfg.problem.n);
        Vector x_ref = reference_solution(a, b);
        Problem p{a, b, m, cholesky(m), x_ref};
        p.norm_a = spectral_norm(a);
        p.norm_b = norm2(p.b);
        p.norm_xref = norm2(p.x_ref);
        p.a_norm_xref = a_norm(a, p.x_ref);
        return p;
    }
};

inline PreconditionerMode bound_mode(SchemeMode m) {
    switch (m) {
        case SchemeMode::none: return PreconditionerMode::none;
        case SchemeMode::left: return PreconditionerMode::left;
        case SchemeMode::right: return PreconditionerMode::right;
        case SchemeMode::split:
        case SchemeMode::saad_split: return PreconditionerMode::split;
    }
    return PreconditionerMode::none;
}

struct RunResult {
    PcgTrace trace;
    BoundInputs inputs;
    BoundReport bounds;
};

/// Runs the solver selected by `cfg.mode`.
inline RunResult execute(const ExperimentConfig& cfg, const Problem& prob) {
    const Vector x0(cfg.problem.n, 0.0);
    RunResult out;
    FloatFormat fs = resolve_format(cfg.fmt_s), fq = resolve_format(cfg.fmt_q), fz = resolve_format(cfg.fmt_z);
    if (cfg.mode == SchemeMode::saad_split) {
        fs = resolve_format(cfg.fmt_l);
        fq = fz = resolve_format(cfg.fmt_r);
        out.trace = saad_split_run(prob.a, prob.b, x0, prob.factor, fs, fq, cfg.maxiter, cfg.stopping_rule());
    } else {
        PreconditionerScheme scheme{bound_mode(cfg.mode), prob.factor, fs, fq, fz};
        if (cfg.mode == SchemeMode::none) scheme = PreconditionerScheme::unpreconditioned(cfg.problem.n);
        out.trace = pcg_run(prob.a, prob.b, x0, scheme, cfg.maxiter, cfg.stopping_rule());
    }
    const PreconditionerMode mode = bound_mode(cfg.mode);
    out.inputs = make_bound_inputs(prob.a, prob.m, mode, fs, fq, fz, prob.x_ref);
    // Default k⋆ threshold n²u²‖A‖²‖M⁻¹‖‖x‖².
    const double n = static_cast<double>(cfg.problem.n);
    const double eps = n * n * out.inputs.u * out.inputs.u * out.inputs.norm_a * out.inputs.norm_a *
                       out.inputs.norm_minv * out.inputs.norm_xref * out.inputs.norm_xref;
    out.trace.k_star_candidate = detect_k_star(out.trace, eps);
    out.bounds = evaluate_bounds(out.inputs, mode, out.trace, cfg.bound_variant);
    return out;
}

namespace detail {

inline std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline void write_config_header(std::ostream& os, const ExperimentConfig& cfg) {
    for (const auto& line : config_lines(cfg)) os << "# " << line << '\n';
}

inline void write_meta(std::ostream& os, std::string_view key, const std::string& value) {
    os << "# meta." << key << " = " << value << '\n';
}

}  // namespace detail

inline void write_run_csv(std::ostream& os, const ExperimentConfig& cfg, const Problem& prob,
                          const RunResult& res) {
    detail::write_config_header(os, cfg);
    detail::write_meta(os, "norm_A", format_double(prob.norm_a));
    detail::write_meta(os, "norm_xref", format_double(prob.norm_xref));
    detail::write_meta(os, "norm_A_times_norm_xref", format_double(prob.norm_a * prob.norm_xref));
    detail::write_meta(os, "norm_b", format_double(prob.norm_b));
    detail::write_meta(os, "a_norm_xref", format_double(prob.a_norm_xref));
    detail::write_meta(os, "kappa_A", format_double(res.inputs.kappa_a));
    detail::write_meta(os, "kappa_Minv", format_double(res.inputs.kappa_minv));
    detail::write_meta(os, "kappa_precond", format_double(res.inputs.kappa_precond));
    detail::write_meta(os, "epsilon_sz", format_double(res.bounds.epsilon_sz));
    detail::write_meta(os, "epsilon_sq", format_double(res.bounds.epsilon_sq));
    detail::write_meta(os, "k_star", res.trace.k_star_candidate ? std::to_string(*res.trace.k_star_candidate) : "");
    detail::write_meta(os, "best_k", res.trace.best_k ? std::to_string(*res.trace.best_k) : "");
    os << run_csv_header << '\n';
    const auto& recs = res.trace.records;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const IterationRecord& r = recs[i];
        os << r.k << ',' << detail::opt(r.alpha) << ',' << detail::opt(r.beta) << ','
           << format_double(r.norm_rhat) << ',' << format_double(r.norm_true_residual) << ','
           << format_double(r.residual_gap) << ',' << format_double(r.a_norm_error) << ','
           << format_double(r.f_value) << ',' << detail::opt(r.local_orth) << ',' << format_double(r.norm_x) << ','
           << format_double(res.bounds.backward_bound[i]) << ',' << format_double(res.bounds.forward_bound[i])
           << ',' << format_double(res.bounds.assumption_lhs[i]) << ',' << to_string(r.status) << '\n';
    }
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
    return f;
}

/// `run`: one solver trace as CSV. Breakdowns still produce the full file.
inline int cmd_run(const ExperimentConfig& cfg) {
    const Problem prob = Problem::build(cfg);
    const RunResult res = execute(cfg, prob);
    auto f = open_output(cfg.output);
    write_run_csv(f, cfg, prob, res);
    return is_breakdown(res.trace.status()) ? exit_breakdown : exit_ok;
}

inline double min_true_residual(const PcgTrace& t) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : t.records)
        if (std::isfinite(r.norm_true_residual)) m = std::min(m, r.norm_true_residual);
    return m;
}

struct CompareResult {
    std::string unified_path;
    std::string saad_path;
    double unified_min = 0.0;
    double saad_min = 0.0;
    double ratio = 0.0;  // saad_min / unified_min
    int exit_code = exit_ok;
    std::string summary;
};

inline std::string output_stem(const std::string& path) {
    const std::string ext = ".csv";
    if (path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
        return path.substr(0, path.size() - ext.size());
    return path;
}

/// `compare-saad`: the unified split recurrence (fmt_s = fmt.L,
/// fmt_q = fmt_z = fmt.R) against the classical split variant with the same
/// formats. Writes <stem>_unified.csv and <stem>_saad.csv.
inline CompareResult cmd_compare_saad(const ExperimentConfig& cfg) {
    const Problem prob = Problem::build(cfg);
    ExperimentConfig unified = cfg;
    unified.mode = SchemeMode::split;
    unified.fmt_s = cfg.fmt_l;
    unified.fmt_q = unified.fmt_z = cfg.fmt_r;
    ExperimentConfig saad = cfg;
    saad.mode = SchemeMode::saad_split;

    CompareResult out;
    const std::string stem = output_stem(cfg.output);
    out.unified_path = stem + "_unified.csv";
    out.saad_path = stem + "_saad.csv";
    unified.output = out.unified_path;
    saad.output = out.saad_path;

    const RunResult r_unified = execute(unified, prob);
    const RunResult r_saad = execute(saad, prob);
    {
        auto f = open_output(out.unified_path);
        write_run_csv(f, unified, prob, r_unified);
    }
    {
        auto f = open_output(out.saad_path);
        write_run_csv(f, saad, prob, r_saad);
    }
    out.unified_min = min_true_residual(r_unified.trace);
    out.saad_min = min_true_residual(r_saad.trace);
    out.ratio = out.saad_min / out.unified_min;
    out.summary = "min_true_residual unified=" + format_double(out.unified_min) + " saad=" +
                  format_double(out.saad_min) + " ratio_saad_over_unified=" + format_double(out.ratio);
    if (is_breakdown(r_unified.trace.status()) || is_breakdown(r_saad.trace.status())) out.exit_code = exit_breakdown;
    return out;
}

struct SweepCell {
    std::string fmt_l;
    std::string fmt_r;
    std::optional<std::size_t> best_k;
    double forward_error = std::numeric_limits<double>::quiet_NaN();   // ‖x̂ − x‖_A / ‖x‖_A
    double backward_error = std::numeric_limits<double>::quiet_NaN();  // ‖b − Ax̂‖ / (‖A‖‖x̂‖ + ‖b‖)
    Status status = Status::running;
};

/// Worker count for the sweep: hardware concurrency, capped by
/// KRYLOVMP_THREADS when set to a positive integer.
inline unsigned sweep_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KRYLOVMP_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

/// One split run per (fmt_L, fmt_R) pair, stopped once the A-norm error
/// stops improving. Rows are sorted by format names, so the thread count
/// never changes the output.
inline std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, unsigned threads = sweep_threads()) {
    const Problem prob = Problem::build(cfg);
    std::vector<SweepCell> cells;
    for (const auto& l : cfg.sweep_formats)
        for (const auto& r : cfg.sweep_formats) {
            SweepCell c;
            c.fmt_l = l;
            c.fmt_r = r;
            cells.push_back(std::move(c));
        }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            SweepCell& c = cells[i];
            const PreconditionerScheme scheme{PreconditionerMode::split, prob.factor, resolve_format(c.fmt_l),
                                              resolve_format(c.fmt_r), resolve_format(c.fmt_r)};
            const Vector x0(cfg.problem.n, 0.0);
            const PcgTrace t = pcg_run(prob.a, prob.b, x0, scheme, cfg.maxiter,
                                       StoppingRule::anorm_error_min(cfg.stop_patience));
            c.status = t.status();
            c.best_k = t.best_k;
            if (t.best_k) {
                const IterationRecord& r = t.records[*t.best_k];
                c.forward_error = r.a_norm_error / prob.a_norm_xref;
                c.backward_error = r.norm_true_residual / (prob.norm_a * r.norm_x + prob.norm_b);
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) {
        return std::tie(a.fmt_l, a.fmt_r) < std::tie(b.fmt_l, b.fmt_r);
    });
    return cells;
}

inline void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<SweepCell>& cells) {
    detail::write_config_header(os, cfg);
    os << sweep_csv_header << '\n';
    for (const auto& c : cells) {
        os << c.fmt_l << ',' << c.fmt_r << ',' << (c.best_k ? std::to_string(*c.best_k) : std::string()) << ','
           << format_double(c.forward_error) << ',' << format_double(c.backward_error) << ','
           << to_string(c.status) << '\n';
    }
}

/// `sweep`: heatmap CSV over every format pair.
inline int cmd_sweep(const ExperimentConfig& cfg) {
    const auto cells = run_sweep(cfg);
    auto f = open_output(cfg.output);
    write_sweep_csv(f, cfg, cells);
    return exit_ok;
}

}  // namespace krylovmp
