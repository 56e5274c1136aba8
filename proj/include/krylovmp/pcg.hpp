#pragma once

// Preconditioned conjugate gradient with left, right and split
// preconditioning from one recurrence, each preconditioner application in
// its own simulated precision, and per-iteration finite-precision
// diagnostics. Also provides the classical split variant that folds the
// left preconditioner into the residual recurrence, for comparison.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "krylovmp/fpx.hpp"
#include "krylovmp/linalg.hpp"
#include "krylovmp/problems.hpp"

namespace krylovmp {

enum class PreconditionerMode { none, left, right, split };

inline std::string_view to_string(PreconditionerMode m) {
    switch (m) {
        case PreconditionerMode::none: return "none";
        case PreconditionerMode::left: return "left";
        case PreconditionerMode::right: return "right";
        case PreconditionerMode::split: return "split";
    }
    return "none";
}

/// The pair (M_L, M_R) expressed through the Cholesky factor L of M = LLᵀ,
/// with the precision used for each of the three applications:
///   s = M_L⁻¹ r  in fmt_s,   q = M_R⁻¹ s  in fmt_q,   z = M_R⁻ᵀ r  in fmt_z.
///
///   none:  M_L = M_R = I
///   left:  M_L = LLᵀ, M_R = I
///   right: M_L = I,   M_R = LLᵀ
///   split: M_L = L,   M_R = Lᵀ
struct PreconditionerScheme {
    PreconditionerMode mode = PreconditionerMode::none;
    LowerTriangular factor;
    FloatFormat fmt_s = fp64;
    FloatFormat fmt_q = fp64;
    FloatFormat fmt_z = fp64;

    static PreconditionerScheme unpreconditioned(std::size_t n) {
        return {PreconditionerMode::none, LowerTriangular::identity(n), fp64, fp64, fp64};
    }

    [[nodiscard]] Vector apply_s(std::span<const double> r) const {
        switch (mode) {
            case PreconditionerMode::left: return solve_spd(factor, r, fmt_s);
            case PreconditionerMode::split: return solve_lower(factor, r, fmt_s);
            default: return Vector(r.begin(), r.end());
        }
    }

    [[nodiscard]] Vector apply_q(std::span<const double> s) const {
        switch (mode) {
            case PreconditionerMode::right: return solve_spd(factor, s, fmt_q);
            case PreconditionerMode::split: return solve_upper(factor, s, fmt_q);
            default: return Vector(s.begin(), s.end());
        }
    }

    // M symmetric, so M_R⁻ᵀ = M⁻¹ in the right case and L⁻¹ in the split case.
    [[nodiscard]] Vector apply_z(std::span<const double> r) const {
        switch (mode) {
            case PreconditionerMode::right: return solve_spd(factor, r, fmt_z);
            case PreconditionerMode::split: return solve_lower(factor, r, fmt_z);
            default: return Vector(r.begin(), r.end());
        }
    }
};

enum class Status { running, converged, max_iter, breakdown_zero_denominator, breakdown_non_finite };

inline std::string_view to_string(Status s) {
    switch (s) {
        case Status::running: return "Running";
        case Status::converged: return "Converged";
        case Status::max_iter: return "MaxIter";
        case Status::breakdown_zero_denominator: return "Breakdown(ZeroDenominator)";
        case Status::breakdown_non_finite: return "Breakdown(NonFinite)";
    }
    return "Running";
}

inline bool is_breakdown(Status s) {
    return s == Status::breakdown_zero_denominator || s == Status::breakdown_non_finite;
}

struct StoppingRule {
    enum class Kind { none, true_residual_below, recursive_residual_below, anorm_error_min };

    Kind kind = Kind::none;
    double tau = 0.0;            // relative to ‖b‖ for the residual rules
    std::size_t patience = 200;  // iterations without a new A-norm error minimum

    static StoppingRule none() { return {}; }
    static StoppingRule true_residual_below(double tau) { return {Kind::true_residual_below, tau, 0}; }
    static StoppingRule recursive_residual_below(double tau) {
        return {Kind::recursive_residual_below, tau, 0};
    }
    static StoppingRule anorm_error_min(std::size_t patience) {
        return {Kind::anorm_error_min, 0.0, patience};
    }
};

struct PcgState {
    std::size_t k = 0;
    Vector x, r, s, q, z, p;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
};

/// Diagnostics for iterate k. `alpha` is the step length that produced x̂_k,
/// `beta` the coefficient β_{k+1} computed from it (absent once the run
/// stops), and `local_orth` is |r̂_kᵀ p̂_{k−1}|.
struct IterationRecord {
    std::size_t k = 0;
    std::optional<double> alpha;
    std::optional<double> beta;
    double zs = 0.0;  // ẑ_kᵀ ŝ_k
    double norm_rhat = 0.0;
    double norm_true_residual = 0.0;
    double residual_gap = 0.0;
    double a_norm_error = 0.0;
    double f_value = 0.0;
    std::optional<double> local_orth;
    double norm_x = 0.0;
    Status status = Status::running;
};

struct PcgTrace {
    std::vector<IterationRecord> records;
    PcgState final_state;
    std::optional<std::size_t> k_star_candidate;
    std::optional<std::size_t> best_k;  // argmin of a_norm_error over the records

    [[nodiscard]] Status status() const { return records.empty() ? Status::running : records.back().status; }
};

namespace detail {

/// Shared bookkeeping of the two solvers: diagnostics, stop test, argmin.
class TraceRecorder {
public:
    TraceRecorder(const SpdMatrix& a, std::span<const double> b, StoppingRule stop)
        : a_(a), b_(b.begin(), b.end()), x_ref_(reference_solution(a, b)), stop_(stop),
          norm_b_(norm2(b)) {}

    /// `residual_view` maps the true residual b − Ax̂ into the space of the
    /// recursively updated residual before the gap is measured.
    template <class ResidualView>
    IterationRecord& record(std::size_t k, std::span<const double> x, std::span<const double> rhat, double zs,
                            ResidualView&& residual_view) {
        IterationRecord rec;
        rec.k = k;
        rec.zs = zs;
        const Vector ax = matvec(a_, x);
        const Vector true_r = subtract(b_, ax);
        rec.norm_rhat = norm2(rhat);
        rec.norm_true_residual = norm2(true_r);
        rec.residual_gap = norm2(subtract(residual_view(true_r), rhat));
        rec.a_norm_error = a_norm(a_, subtract(x, x_ref_));
        rec.f_value = 0.5 * dot(x, ax) - dot(x, b_);
        rec.norm_x = norm2(x);
        if (std::isfinite(rec.a_norm_error) && (!best_ || rec.a_norm_error < best_error_)) {
            best_ = k;
            best_error_ = rec.a_norm_error;
        }
        trace_.records.push_back(rec);
        return trace_.records.back();
    }

    [[nodiscard]] bool should_stop() const {
        const IterationRecord& rec = trace_.records.back();
        switch (stop_.kind) {
            case StoppingRule::Kind::none: return false;
            case StoppingRule::Kind::true_residual_below: return rec.norm_true_residual <= stop_.tau * norm_b_;
            case StoppingRule::Kind::recursive_residual_below: return rec.norm_rhat <= stop_.tau * norm_b_;
            case StoppingRule::Kind::anorm_error_min: return best_ && rec.k - *best_ >= stop_.patience;
        }
        return false;
    }

    void finish(Status status, PcgState state) {
        trace_.records.back().status = status;
        trace_.final_state = std::move(state);
        trace_.best_k = best_;
    }

    IterationRecord& last() { return trace_.records.back(); }
    PcgTrace take() { return std::move(trace_); }

private:
    const SpdMatrix& a_;
    Vector b_;
    Vector x_ref_;
    StoppingRule stop_;
    double norm_b_;
    PcgTrace trace_;
    std::optional<std::size_t> best_;
    double best_error_ = 0.0;
};

inline bool is_zero(std::span<const double> v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

struct Identity {
    Vector operator()(const Vector& v) const { return v; }
};

inline void check_dimensions(const SpdMatrix& a, std::span<const double> b, std::span<const double> x0,
                             std::size_t factor_n, std::size_t maxiter) {
    const std::size_t n = a.size();
    if (b.size() != n || x0.size() != n || factor_n != n)
        throw std::invalid_argument("dimension mismatch between operator, vectors and preconditioner");
    if (maxiter < 1) throw std::invalid_argument("maxiter must be at least 1");
}

// Quotient classification. 0/0 is NaN and reported as non-finite; a zero
// denominator under a nonzero numerator is a genuine zero-denominator
// breakdown.
inline std::optional<Status> division_breakdown(double num, double den) {
    if (den == 0.0 && num != 0.0 && std::isfinite(num)) return Status::breakdown_zero_denominator;
    return std::nullopt;
}

}  // namespace detail

/// Runs the unified PCG recurrence:
///
///   α_k = ẑ_kᵀŝ_k / p̂_kᵀAp̂_k,  x̂_{k+1} = x̂_k + α_k p̂_k,  r̂_{k+1} = r̂_k − α_k Ap̂_k,
///   ŝ_{k+1} = M_L⁻¹r̂_{k+1},  q̂_{k+1} = M_R⁻¹ŝ_{k+1},  ẑ_{k+1} = M_R⁻ᵀr̂_{k+1},
///   (stop test)  β_{k+1} = ẑ_{k+1}ᵀŝ_{k+1} / ẑ_kᵀŝ_k,  p̂_{k+1} = q̂_{k+1} + β_{k+1}p̂_k.
///
/// The trace holds one record per iterate starting with x̂_0. Breakdowns end
/// the run and are reported through the status of the last record.
inline PcgTrace pcg_run(const SpdMatrix& a, std::span<const double> b, std::span<const double> x0,
                        const PreconditionerScheme& scheme, std::size_t maxiter, StoppingRule stop) {
    detail::check_dimensions(a, b, x0, scheme.factor.size(), maxiter);
    detail::TraceRecorder rec(a, b, stop);

    PcgState st;
    st.x.assign(x0.begin(), x0.end());
    st.r = subtract(b, matvec(a, st.x));
    st.s = scheme.apply_s(st.r);
    st.q = scheme.apply_q(st.s);
    st.p = st.q;
    st.z = scheme.apply_z(st.r);
    double rho = dot(st.z, st.s);
    rec.record(0, st.x, st.r, rho, detail::Identity{});

    auto state_finite = [&] {
        return all_finite(st.x) && all_finite(st.r) && all_finite(st.s) && all_finite(st.q) &&
               all_finite(st.z) && all_finite(st.p);
    };

    if (!state_finite() || !std::isfinite(rho)) {
        rec.finish(Status::breakdown_non_finite, std::move(st));
        return rec.take();
    }

    for (std::size_t k = 0; k < maxiter; ++k) {
        const Vector ap = matvec(a, st.p);
        const double pap = dot(st.p, ap);
        if (auto bd = detail::division_breakdown(rho, pap)) {
            rec.finish(*bd, std::move(st));
            return rec.take();
        }
        st.alpha = rho / pap;
        st.x = axpy(st.alpha, st.p, st.x);
        st.r = axpy(-st.alpha, ap, st.r);
        st.s = scheme.apply_s(st.r);
        st.q = scheme.apply_q(st.s);
        st.z = scheme.apply_z(st.r);
        st.k = k + 1;
        const double rho_next = dot(st.z, st.s);

        IterationRecord& r = rec.record(k + 1, st.x, st.r, rho_next, detail::Identity{});
        r.alpha = st.alpha;
        r.local_orth = std::fabs(dot(st.r, st.p));

        if (!std::isfinite(st.alpha) || !std::isfinite(rho_next) || !state_finite()) {
            rec.finish(Status::breakdown_non_finite, std::move(st));
            return rec.take();
        }
        if (detail::is_zero(st.r) || rec.should_stop()) {
            rec.finish(Status::converged, std::move(st));
            return rec.take();
        }
        if (k + 1 == maxiter) break;

        if (auto bd = detail::division_breakdown(rho_next, rho)) {
            rec.finish(*bd, std::move(st));
            return rec.take();
        }
        st.beta = rho_next / rho;
        rec.last().beta = st.beta;
        if (!std::isfinite(st.beta)) {
            rec.finish(Status::breakdown_non_finite, std::move(st));
            return rec.take();
        }
        st.p = axpy(st.beta, st.p, st.q);
        rho = rho_next;
    }
    rec.finish(Status::max_iter, std::move(st));
    return rec.take();
}

/// Classical split-preconditioned CG with M = LLᵀ, where the residual
/// recurrence carries the left-preconditioned residual:
///
///   α_k = r̂_kᵀr̂_k / p̂_kᵀAp̂_k,  x̂_{k+1} = x̂_k + α_k p̂_k,
///   r̂_{k+1} = r̂_k − α_k L⁻¹Ap̂_k   (L⁻¹ in fmt_l),
///   β_{k+1} = r̂_{k+1}ᵀr̂_{k+1} / r̂_kᵀr̂_k,  p̂_{k+1} = L⁻ᵀr̂_{k+1} + β_{k+1}p̂_k   (L⁻ᵀ in fmt_r).
///
/// `norm_rhat` refers to the preconditioned residual, and `residual_gap` to
/// ‖L⁻¹(b − Ax̂_k) − r̂_k‖ with L⁻¹ applied in binary64.
inline PcgTrace saad_split_run(const SpdMatrix& a, std::span<const double> b, std::span<const double> x0,
                               const LowerTriangular& l, const FloatFormat& fmt_l, const FloatFormat& fmt_r,
                               std::size_t maxiter, StoppingRule stop) {
    detail::check_dimensions(a, b, x0, l.size(), maxiter);
    detail::TraceRecorder rec(a, b, stop);
    auto view = [&l](const Vector& true_r) { return solve_lower(l, true_r, fp64); };

    PcgState st;
    st.x.assign(x0.begin(), x0.end());
    st.r = solve_lower(l, subtract(b, matvec(a, st.x)), fmt_l);
    st.s = st.r;
    st.z = st.r;
    st.q = solve_upper(l, st.r, fmt_r);
    st.p = st.q;
    double rho = dot(st.r, st.r);
    rec.record(0, st.x, st.r, rho, view);

    auto state_finite = [&] { return all_finite(st.x) && all_finite(st.r) && all_finite(st.p); };
    if (!state_finite() || !std::isfinite(rho)) {
        rec.finish(Status::breakdown_non_finite, std::move(st));
        return rec.take();
    }

    for (std::size_t k = 0; k < maxiter; ++k) {
        const Vector ap = matvec(a, st.p);
        const double pap = dot(st.p, ap);
        if (auto bd = detail::division_breakdown(rho, pap)) {
            rec.finish(*bd, std::move(st));
            return rec.take();
        }
        st.alpha = rho / pap;
        st.x = axpy(st.alpha, st.p, st.x);
        st.r = axpy(-st.alpha, solve_lower(l, ap, fmt_l), st.r);
        st.s = st.r;
        st.z = st.r;
        st.k = k + 1;
        const double rho_next = dot(st.r, st.r);

        IterationRecord& r = rec.record(k + 1, st.x, st.r, rho_next, view);
        r.alpha = st.alpha;
        r.local_orth = std::fabs(dot(st.r, st.p));

        if (!std::isfinite(st.alpha) || !std::isfinite(rho_next) || !state_finite()) {
            rec.finish(Status::breakdown_non_finite, std::move(st));
            return rec.take();
        }
        if (detail::is_zero(st.r) || rec.should_stop()) {
            rec.finish(Status::converged, std::move(st));
            return rec.take();
        }
        if (k + 1 == maxiter) break;

        if (auto bd = detail::division_breakdown(rho_next, rho)) {
            rec.finish(*bd, std::move(st));
            return rec.take();
        }
        st.beta = rho_next / rho;
        rec.last().beta = st.beta;
        if (!std::isfinite(st.beta)) {
            rec.finish(Status::breakdown_non_finite, std::move(st));
            return rec.take();
        }
        st.q = solve_upper(l, st.r, fmt_r);
        st.p = axpy(st.beta, st.p, st.q);
        rho = rho_next;
    }
    rec.finish(Status::max_iter, std::move(st));
    return rec.take();
}

/// First k with f(x̂_k) − f(x̂_{k+1}) ≤ epsilon, scanning consecutive records
/// with finite f values.
inline std::optional<std::size_t> detect_k_star(const PcgTrace& trace, double epsilon) {
    const auto& recs = trace.records;
    for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
        const double f0 = recs[i].f_value;
        const double f1 = recs[i + 1].f_value;
        if (!std::isfinite(f0) || !std::isfinite(f1)) break;
        if (f0 - f1 <= epsilon) return recs[i].k;
    }
    return std::nullopt;
}

}  // namespace krylovmp
