#pragma once

// Synthetic SPD test problems with a controllable eigenvalue distribution,
// plus the eigenvalue-truncation preconditioner built from them.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "krylovmp/linalg.hpp"

namespace krylovmp {

struct ProblemSpec {
    std::size_t n = 85;
    double lambda_1 = 1.0;
    double lambda_n = 1e5;
    double rho = 0.6;
    std::size_t trunc_index = 55;  // 1-based index i; entries i..n of M equal λ_i

    void validate() const {
        if (n < 2) throw std::invalid_argument("problem.n must be at least 2");
        if (!(lambda_1 > 0.0)) throw std::invalid_argument("problem.lambda_1 must be positive");
        if (!(lambda_n > lambda_1)) throw std::invalid_argument("problem.lambda_n must exceed lambda_1");
        if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("problem.rho must lie in [0, 1]");
        if (trunc_index < 2 || trunc_index > n)
            throw std::invalid_argument("problem.trunc_index must lie in [2, n]");
    }

    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// λ_1, …, λ_n with λ_i = λ_1 + (i−1)/(n−1)·(λ_n − λ_1)·ρ^(n−i) for interior i.
inline Vector problem_eigenvalues(const ProblemSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n;

    // powers[k] = ρ^k by repeated multiplication; std::pow may differ by an
    // ulp between platforms.
    Vector powers(n, 1.0);
    for (std::size_t k = 1; k < n; ++k) powers[k] = powers[k - 1] * spec.rho;

    Vector lambda(n);
    lambda[0] = spec.lambda_1;
    lambda[n - 1] = spec.lambda_n;
    const double width = spec.lambda_n - spec.lambda_1;
    for (std::size_t i = 2; i < n; ++i) {
        const double frac = static_cast<double>(i - 1) / static_cast<double>(n - 1);
        lambda[i - 1] = spec.lambda_1 + frac * width * powers[n - i];
    }
    return lambda;
}

inline SpdMatrix build_matrix(const ProblemSpec& spec) {
    return SpdMatrix::diagonal(problem_eigenvalues(spec));
}

/// b = n^{-1/2} (1, …, 1)ᵀ.
inline Vector build_rhs(std::size_t n) {
    if (n == 0) throw std::invalid_argument("right-hand side dimension must be positive");
    return Vector(n, 1.0 / std::sqrt(static_cast<double>(n)));
}

/// M = diag(λ_1, …, λ_{i−1}, λ_i, …, λ_i): the trailing n − i eigenvalues of A
/// are truncated to λ_i.
inline SpdMatrix build_preconditioner(const ProblemSpec& spec, const SpdMatrix& a) {
    spec.validate();
    if (!a.is_diagonal() || a.size() != spec.n)
        throw std::invalid_argument("truncation preconditioner needs the diagonal problem matrix");
    Vector m = a.diagonal_entries();
    const double pivot = m[spec.trunc_index - 1];
    for (std::size_t k = spec.trunc_index - 1; k < m.size(); ++k) m[k] = pivot;
    return SpdMatrix::diagonal(std::move(m));
}

namespace detail {

// Error-free transformations used by the refinement residual.
inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double bb = s - a;
    e = (a - (s - bb)) + (b - bb);
}

inline void two_prod(double a, double b, double& p, double& e) {
    p = a * b;
    e = std::fma(a, b, -p);
}

}  // namespace detail

/// High-accuracy solution of A x = b used for error diagnostics.
///
/// Diagonal systems are solved componentwise. Dense systems use an fp64
/// Cholesky solve followed by one refinement step whose residual is
/// accumulated with compensated summation.
inline Vector reference_solution(const SpdMatrix& a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (b.size() != n) throw std::invalid_argument("dimension mismatch in reference_solution");
    if (a.is_diagonal()) {
        const auto& d = a.diagonal_entries();
        Vector x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / d[i];
        return x;
    }
    const LowerTriangular l = cholesky(a);
    Vector x = solve_spd(l, b, fp64);

    const auto& m = a.dense_entries();
    Vector r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        double c = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double p = 0.0, pe = 0.0, t = 0.0, te = 0.0;
            detail::two_prod(-m(i, j), x[j], p, pe);
            detail::two_sum(s, p, t, te);
            s = t;
            c += te + pe;
        }
        r[i] = s + c;
    }
    const Vector dx = solve_spd(l, r, fp64);
    for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    return x;
}

}  // namespace krylovmp
