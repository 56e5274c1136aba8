#pragma once

// Closed-form evaluators for the backward/forward error bounds of mixed
// precision PCG with Cholesky-factor preconditioners, and for the
// sufficient condition under which they hold. Every O(·) constant is 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "krylovmp/linalg.hpp"
#include "krylovmp/pcg.hpp"

namespace krylovmp {

/// Condition number of the preconditioned operator M_L⁻¹AM_R⁻¹. Left, right
/// and split variants are similar to L⁻¹AL⁻ᵀ and share its spectrum.
inline double kappa_preconditioned(const SpdMatrix& a, const SpdMatrix& m, PreconditionerMode mode) {
    if (mode == PreconditionerMode::none) return cond2(a);
    if (a.size() != m.size()) throw std::invalid_argument("operator and preconditioner sizes differ");
    const std::size_t n = a.size();
    if (a.is_diagonal() && m.is_diagonal()) {
        const auto& da = a.diagonal_entries();
        const auto& dm = m.diagonal_entries();
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = da[i] / dm[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        return hi / lo;
    }
    // C = L⁻¹ (L⁻¹A)ᵀ = L⁻¹AL⁻ᵀ, column by column.
    const LowerTriangular l = cholesky(m);
    const Matrix ad = a.to_dense();
    Matrix x(n);  // x = L⁻¹A, stored column-wise
    for (std::size_t j = 0; j < n; ++j) {
        Vector col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = ad(i, j);
        const Vector y = solve_lower(l, col, fp64);
        for (std::size_t i = 0; i < n; ++i) x(i, j) = y[i];
    }
    Matrix c(n);
    for (std::size_t j = 0; j < n; ++j) {
        Vector col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = x(j, i);
        const Vector y = solve_lower(l, col, fp64);
        for (std::size_t i = 0; i < n; ++i) c(i, j) = y[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = 0.5 * (c(i, j) + c(j, i));
            c(i, j) = s;
            c(j, i) = s;
        }
    const Vector ev = symmetric_eigen(c).values;
    if (!(ev.front() > 0.0)) throw NotPositiveDefinite("preconditioned operator is not positive definite");
    return ev.back() / ev.front();
}

enum class BoundVariant { plot, strict };

struct BoundInputs {
    std::size_t n = 0;
    double u = fp64.unit_roundoff();  // working precision
    double u_s = 0.0;
    double u_q = 0.0;
    double u_z = 0.0;
    double kappa_a = 1.0;
    double kappa_minv = 1.0;
    double kappa_precond = 1.0;  // κ(M_L⁻¹AM_R⁻¹)
    double norm_a = 1.0;
    double norm_minv = 1.0;
    double norm_xref = 1.0;
    double max_xratio = 1.0;  // max_j ‖x̂_j‖/‖x‖, floored at 1
};

/// Roundoff and exponent pairs (u₁, m₁), (u₂, m₂) selected by the
/// preconditioning scheme.
struct CaseConstants {
    double u1 = 0.0;
    double m1 = 0.0;
    double u2 = 0.0;
    double m2 = 0.0;
};

inline CaseConstants case_constants(const BoundInputs& in, PreconditionerMode mode) {
    switch (mode) {
        case PreconditionerMode::left: return {in.u_s, 1.5, in.u_s, 1.5};
        case PreconditionerMode::right: return {in.u_z, 1.5, in.u_q + in.u_z, 1.5};
        case PreconditionerMode::split: return {in.u_s + in.u_z, 0.5, in.u_s + in.u_q + in.u_z, 1.0};
        case PreconditionerMode::none: break;
    }
    return {};
}

struct EpsilonPre {
    double sz = 0.0;
    double sq = 0.0;
};

inline EpsilonPre epsilon_pre_terms(const BoundInputs& in, PreconditionerMode mode) {
    const double n = static_cast<double>(in.n);
    const double k = in.kappa_minv;
    switch (mode) {
        case PreconditionerMode::left: {
            const double e = n * in.u_s * std::pow(k, 1.5);
            return {e, e};
        }
        case PreconditionerMode::right:
            return {n * in.u_z * std::pow(k, 1.5), n * in.u_q * std::pow(k, 1.5)};
        case PreconditionerMode::split:
            return {n * (in.u_s + in.u_z) * std::sqrt(k), n * (in.u_s + in.u_q) * k};
        case PreconditionerMode::none: break;
    }
    return {};
}

/// Left-hand side of the sufficient condition at iteration k:
///
///   n(k+1)uκ(A) / (1 − nuκ(A)) + n(k+1)u₂κ(M⁻¹)^{m₂} + k(k+1)uκ(M⁻¹)^{1/2}κ(M_L⁻¹AM_R⁻¹)^{1/2}
///
/// The bounds apply when this is at most 1/2. Returns +inf when the
/// denominator is not positive.
inline double assumption_lhs(const BoundInputs& in, PreconditionerMode mode, std::size_t k) {
    const double n = static_cast<double>(in.n);
    const double kk = static_cast<double>(k);
    const double denom = 1.0 - n * in.u * in.kappa_a;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    const CaseConstants c = case_constants(in, mode);
    const double t1 = n * (kk + 1.0) * in.u * in.kappa_a / denom;
    const double t2 = c.u2 == 0.0 ? 0.0 : n * (kk + 1.0) * c.u2 * std::pow(in.kappa_minv, c.m2);
    const double t3 = kk * (kk + 1.0) * in.u * std::sqrt(in.kappa_minv) * std::sqrt(in.kappa_precond);
    return t1 + t2 + t3;
}

/// Bound on ‖b − Ax̂_i‖/(‖A‖‖x‖). The plot variant drops the n·k² factor.
inline double backward_bound(const BoundInputs& in, std::size_t k, BoundVariant variant = BoundVariant::plot) {
    double b = in.u * std::sqrt(in.kappa_minv) * std::max(in.max_xratio, 1.0);
    if (variant == BoundVariant::strict) {
        const double kk = static_cast<double>(k);
        b *= static_cast<double>(in.n) * kk * kk;
    }
    return b;
}

/// Bound on ‖x̂_i − x‖_A/(‖A‖^{1/2}‖x‖); the backward bound times κ(A)^{1/2}.
inline double forward_bound(const BoundInputs& in, std::size_t k, BoundVariant variant = BoundVariant::plot) {
    return backward_bound(in, k, variant) * std::sqrt(in.kappa_a);
}

/// C·n·k·u·‖A‖·max_{j≤k}(‖x̂_j‖, ‖x‖).
inline double residual_gap_bound(const BoundInputs& in, std::size_t k, double max_x_abs, double c = 1.0) {
    return c * static_cast<double>(in.n) * static_cast<double>(k) * in.u * in.norm_a * max_x_abs;
}

/// Problem-level inputs; max_xratio stays at 1 until a trace supplies it.
inline BoundInputs make_bound_inputs(const SpdMatrix& a, const SpdMatrix& m, PreconditionerMode mode,
                                     const FloatFormat& fmt_s, const FloatFormat& fmt_q,
                                     const FloatFormat& fmt_z, std::span<const double> x_ref) {
    BoundInputs in;
    in.n = a.size();
    in.kappa_a = cond2(a);
    in.norm_a = spectral_norm(a);
    in.norm_xref = norm2(x_ref);
    if (mode == PreconditionerMode::none) {
        in.kappa_precond = in.kappa_a;
        return in;
    }
    in.kappa_minv = cond2(m);
    in.norm_minv = inverse_spectral_norm(m);
    in.kappa_precond = kappa_preconditioned(a, m, mode);
    // Only the applications a scheme performs contribute roundoff.
    const bool uses_s = mode != PreconditionerMode::right;
    const bool uses_qz = mode != PreconditionerMode::left;
    in.u_s = uses_s ? fmt_s.unit_roundoff() : 0.0;
    in.u_q = uses_qz ? fmt_q.unit_roundoff() : 0.0;
    in.u_z = uses_qz ? fmt_z.unit_roundoff() : 0.0;
    return in;
}

struct BoundReport {
    std::vector<double> backward_bound;
    std::vector<double> forward_bound;
    std::vector<double> assumption_lhs;
    std::vector<double> max_xratio;
    double epsilon_sz = 0.0;
    double epsilon_sq = 0.0;
    /// Last k such that the assumption holds for every j ≤ k.
    std::optional<std::size_t> assumption_satisfied_up_to_k;
};

/// Evaluates the bounds along a trace. The x-ratio at record k is the running
/// max over j ≤ k+1 of ‖x̂_j‖/‖x‖ (floored at 1), skipping non-finite norms.
inline BoundReport evaluate_bounds(BoundInputs in, PreconditionerMode mode, const PcgTrace& trace,
                                   BoundVariant variant = BoundVariant::plot) {
    BoundReport rep;
    const auto eps = epsilon_pre_terms(in, mode);
    rep.epsilon_sz = eps.sz;
    rep.epsilon_sq = eps.sq;
    const auto& recs = trace.records;
    const std::size_t count = recs.size();

    std::vector<double> prefix(count, 1.0);
    double running = 1.0;
    for (std::size_t j = 0; j < count; ++j) {
        const double ratio = recs[j].norm_x / in.norm_xref;
        if (std::isfinite(ratio)) running = std::max(running, ratio);
        prefix[j] = running;
    }

    bool holds = true;
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t k = recs[j].k;
        in.max_xratio = prefix[std::min(j + 1, count - 1)];
        rep.max_xratio.push_back(in.max_xratio);
        rep.backward_bound.push_back(backward_bound(in, k, variant));
        rep.forward_bound.push_back(forward_bound(in, k, variant));
        const double lhs = assumption_lhs(in, mode, k);
        rep.assumption_lhs.push_back(lhs);
        if (holds && lhs <= 0.5)
            rep.assumption_satisfied_up_to_k = k;
        else
            holds = false;
    }
    return rep;
}

}  // namespace krylovmp
