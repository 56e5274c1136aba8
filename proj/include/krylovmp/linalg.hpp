#pragma once

// SPD operators, Cholesky factors, format-parameterized triangular solves,
// and working-precision vector kernels.
//
// All binary64 reductions (dot products, matrix-vector rows) accumulate
// strictly left to right so results are reproducible bit for bit.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "krylovmp/fpx.hpp"

namespace krylovmp {

using Vector = std::vector<double>;

class NotPositiveDefinite : public std::runtime_error {
public:
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

/// Square row-major matrix.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    [[nodiscard]] Matrix transposed() const {
        Matrix t(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        assert(a.n_ == b.n_);
        Matrix c(a.n_);
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t j = 0; j < a.n_; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < a.n_; ++k) s += a(i, k) * b(k, j);
                c(i, j) = s;
            }
        return c;
    }

    [[nodiscard]] double frobenius_norm() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

// ---------------------------------------------------------------------------
// Vector kernels
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// y + alpha * x
inline Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    Vector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + alpha * x[i];
    return out;
}

inline double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver (cyclic Jacobi)
// ---------------------------------------------------------------------------

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // column j is the eigenvector of values[j]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// 1e-14 * ||M||_F, or 100 sweeps.
inline SymmetricEigen symmetric_eigen(Matrix a) {
    const std::size_t n = a.size();
    Matrix v = Matrix::identity(n);
    const double tol = 1e-14 * a.frobenius_norm();

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymmetricEigen out{Vector(n), Matrix(n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cholesky factor
// ---------------------------------------------------------------------------

/// Lower-triangular factor with a strictly positive diagonal. Diagonal
/// factors take a fast path in every solve.
class LowerTriangular {
public:
    static LowerTriangular diagonal(Vector d) {
        LowerTriangular l;
        l.n_ = d.size();
        l.diag_ = std::move(d);
        return l;
    }
    static LowerTriangular dense(Matrix m) {
        LowerTriangular l;
        l.n_ = m.size();
        l.dense_ = std::move(m);
        l.is_dense_ = true;
        return l;
    }
    static LowerTriangular identity(std::size_t n) { return diagonal(Vector(n, 1.0)); }

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] bool is_diagonal() const { return !is_dense_; }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        if (is_dense_) return dense_(i, j);
        return i == j ? diag_[i] : 0.0;
    }

    /// Materializes the factor as a dense matrix.
    [[nodiscard]] Matrix to_dense() const {
        if (is_dense_) return dense_;
        Matrix m(n_);
        for (std::size_t i = 0; i < n_; ++i) m(i, i) = diag_[i];
        return m;
    }

private:
    std::size_t n_ = 0;
    Vector diag_;
    Matrix dense_;
    bool is_dense_ = false;
};

inline LowerTriangular dense_cholesky(const Matrix& m) {
    const std::size_t n = m.size();
    Matrix l(n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) throw NotPositiveDefinite("non-positive pivot at column " + std::to_string(j));
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return LowerTriangular::dense(std::move(l));
}

// ---------------------------------------------------------------------------
// SPD operator
// ---------------------------------------------------------------------------

class SpdMatrix {
public:
    struct Diagonal {
        Vector eigenvalues;
    };
    struct Dense {
        Matrix a;
    };

    static SpdMatrix diagonal(Vector d) {
        for (std::size_t i = 0; i < d.size(); ++i)
            if (!(d[i] > 0.0))
                throw NotPositiveDefinite("diagonal entry " + std::to_string(i) + " is not positive");
        return SpdMatrix(Diagonal{std::move(d)});
    }

    /// Symmetrizes `a` as (a + aᵀ)/2 and checks positive definiteness.
    static SpdMatrix dense(Matrix a) {
        const std::size_t n = a.size();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double s = 0.5 * (a(i, j) + a(j, i));
                a(i, j) = s;
                a(j, i) = s;
            }
        (void)dense_cholesky(a);
        return SpdMatrix(Dense{std::move(a)});
    }

    static SpdMatrix identity(std::size_t n) { return SpdMatrix(Diagonal{Vector(n, 1.0)}); }

    [[nodiscard]] std::size_t size() const {
        return std::visit(
            [](const auto& k) -> std::size_t {
                if constexpr (std::is_same_v<std::decay_t<decltype(k)>, Diagonal>)
                    return k.eigenvalues.size();
                else
                    return k.a.size();
            },
            kind_);
    }

    [[nodiscard]] bool is_diagonal() const { return std::holds_alternative<Diagonal>(kind_); }
    [[nodiscard]] const Vector& diagonal_entries() const { return std::get<Diagonal>(kind_).eigenvalues; }
    [[nodiscard]] const Matrix& dense_entries() const { return std::get<Dense>(kind_).a; }

    [[nodiscard]] Matrix to_dense() const {
        if (!is_diagonal()) return dense_entries();
        const auto& d = diagonal_entries();
        Matrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    /// Eigenvalues in ascending order.
    [[nodiscard]] Vector eigenvalues() const {
        if (is_diagonal()) {
            Vector d = diagonal_entries();
            std::sort(d.begin(), d.end());
            return d;
        }
        return symmetric_eigen(dense_entries()).values;
    }

private:
    explicit SpdMatrix(std::variant<Diagonal, Dense> k) : kind_(std::move(k)) {}
    std::variant<Diagonal, Dense> kind_;
};

inline Vector matvec(const SpdMatrix& a, std::span<const double> v) {
    const std::size_t n = a.size();
    assert(v.size() == n);
    Vector out(n);
    if (a.is_diagonal()) {
        const auto& d = a.diagonal_entries();
        for (std::size_t i = 0; i < n; ++i) out[i] = d[i] * v[i];
        return out;
    }
    const auto& m = a.dense_entries();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

/// sqrt(vᵀAv), with a slightly negative quadratic form clamped to zero.
inline double a_norm(const SpdMatrix& a, std::span<const double> v) {
    const Vector av = matvec(a, v);
    return std::sqrt(std::max(dot(v, av), 0.0));
}

inline LowerTriangular cholesky(const SpdMatrix& m) {
    if (m.is_diagonal()) {
        Vector l(m.size());
        const auto& d = m.diagonal_entries();
        for (std::size_t i = 0; i < d.size(); ++i) l[i] = std::sqrt(d[i]);
        return LowerTriangular::diagonal(std::move(l));
    }
    return dense_cholesky(m.dense_entries());
}

/// Spectral condition number λ_max / λ_min.
inline double cond2(const SpdMatrix& m) {
    const Vector ev = m.eigenvalues();
    if (!(ev.front() > 0.0)) throw NotPositiveDefinite("smallest eigenvalue is not positive");
    return ev.back() / ev.front();
}

/// ‖M‖₂ = λ_max(M).
inline double spectral_norm(const SpdMatrix& m) { return m.eigenvalues().back(); }

/// ‖M⁻¹‖₂ = 1 / λ_min(M).
inline double inverse_spectral_norm(const SpdMatrix& m) {
    const double lmin = m.eigenvalues().front();
    if (!(lmin > 0.0)) throw NotPositiveDefinite("smallest eigenvalue is not positive");
    return 1.0 / lmin;
}

// ---------------------------------------------------------------------------
// Triangular solves in a simulated format
// ---------------------------------------------------------------------------
//
// Factor entries and the right-hand side are rounded to `fmt` on every call,
// then substitution runs with every multiply, subtract and divide rounded to
// `fmt`, including the running sum. Structurally zero entries of a dense
// factor are skipped, which makes the dense path agree bitwise with the
// diagonal fast path.

/// Solves L y = y_b.
inline Vector solve_lower(const LowerTriangular& l, std::span<const double> y_b, const FloatFormat& fmt) {
    const std::size_t n = l.size();
    assert(y_b.size() == n);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = round_to_format(y_b[i], fmt);
        if (!l.is_diagonal()) {
            for (std::size_t j = 0; j < i; ++j) {
                const double lij = l(i, j);
                if (lij == 0.0) continue;
                s = fl(Op::sub, s, fl(Op::mul, round_to_format(lij, fmt), y[j], fmt), fmt);
            }
        }
        y[i] = fl(Op::div, s, round_to_format(l(i, i), fmt), fmt);
    }
    return y;
}

/// Solves Lᵀ y = y_b.
inline Vector solve_upper(const LowerTriangular& l, std::span<const double> y_b, const FloatFormat& fmt) {
    const std::size_t n = l.size();
    assert(y_b.size() == n);
    Vector y(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = round_to_format(y_b[ii], fmt);
        if (!l.is_diagonal()) {
            for (std::size_t j = ii + 1; j < n; ++j) {
                const double lji = l(j, ii);
                if (lji == 0.0) continue;
                s = fl(Op::sub, s, fl(Op::mul, round_to_format(lji, fmt), y[j], fmt), fmt);
            }
        }
        y[ii] = fl(Op::div, s, round_to_format(l(ii, ii), fmt), fmt);
    }
    return y;
}

/// Solves (L Lᵀ) y = y_b with two triangular solves in `fmt`.
inline Vector solve_spd(const LowerTriangular& l, std::span<const double> y_b, const FloatFormat& fmt) {
    return solve_upper(l, solve_lower(l, y_b, fmt), fmt);
}

}  // namespace krylovmp
