#pragma once

// Simulated reduced-precision binary floating point on a binary64 carrier.
//
// Values of a low-precision format are kept as binary64 numbers that happen
// to be exactly representable in that format. Every arithmetic operation in
// a low-precision region is carried out in binary64 and then rounded back
// (round-to-nearest, ties-to-even), one operation at a time.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace krylovmp {

struct FloatFormat {
    std::string_view name;
    int exponent_bits = 0;
    int mantissa_bits = 0;  // stored fraction bits, implicit bit excluded

    [[nodiscard]] constexpr int bias() const { return (1 << (exponent_bits - 1)) - 1; }
    [[nodiscard]] constexpr int min_exponent() const { return 1 - bias(); }
    [[nodiscard]] constexpr int max_exponent() const { return bias(); }

    [[nodiscard]] double unit_roundoff() const { return std::ldexp(1.0, -(mantissa_bits + 1)); }
    [[nodiscard]] double min_normal() const { return std::ldexp(1.0, min_exponent()); }
    [[nodiscard]] double min_subnormal() const {
        return std::ldexp(1.0, min_exponent() - mantissa_bits);
    }
    [[nodiscard]] double max_finite() const {
        return std::ldexp(2.0 - std::ldexp(1.0, -mantissa_bits), max_exponent());
    }
    [[nodiscard]] constexpr bool has_subnormals() const { return true; }
    [[nodiscard]] constexpr bool is_binary64() const {
        return exponent_bits == 11 && mantissa_bits == 52;
    }

    friend constexpr bool operator==(const FloatFormat& a, const FloatFormat& b) {
        return a.exponent_bits == b.exponent_bits && a.mantissa_bits == b.mantissa_bits;
    }
};

inline constexpr FloatFormat fp64{"fp64", 11, 52};
inline constexpr FloatFormat fp32{"fp32", 8, 23};
inline constexpr FloatFormat fp16{"fp16", 5, 10};
inline constexpr FloatFormat bfloat16{"bfloat16", 8, 7};

inline constexpr FloatFormat builtin_formats[] = {fp64, fp32, fp16, bfloat16};

/// Looks up a built-in format by its exact (case-sensitive) name.
inline std::optional<FloatFormat> format_by_name(std::string_view name) {
    for (const auto& f : builtin_formats) {
        if (f.name == name) return f;
    }
    return std::nullopt;
}

/// Rounds a binary64 value to the nearest value of `fmt` (ties to even).
///
/// Magnitudes at or past the overflow threshold become infinities, values
/// below half the smallest subnormal flush to a signed zero, NaN stays NaN.
inline double round_to_format(double x, const FloatFormat& fmt) {
    if (fmt.is_binary64() || !std::isfinite(x) || x == 0.0) return x;

    int e2 = 0;
    std::frexp(x, &e2);  // |x| = f * 2^e2, f in [0.5, 1)
    const int exponent = std::max(e2 - 1, fmt.min_exponent());
    const int quantum = exponent - fmt.mantissa_bits;

    // Scaling by a power of two is exact; nearbyint honours the default
    // round-to-nearest-even mode.
    const double scaled = std::nearbyint(std::ldexp(x, -quantum));
    const double r = std::ldexp(scaled, quantum);
    if (std::fabs(r) > fmt.max_finite()) return std::copysign(std::numeric_limits<double>::infinity(), x);
    return r;
}

enum class Op { add, sub, mul, div };

/// One arithmetic operation correctly rounded to `fmt`.
///
/// The exact result is first rounded to binary64 and then to `fmt`. That
/// double rounding is innocuous for +, -, *, / whenever the carrier has at
/// least 2p+2 significand bits for a target with p bits (53 >= 2*24+2), so
/// the result equals native `fmt` arithmetic for fp32, fp16 and bfloat16.
/// Operands are expected to be representable in `fmt` already.
inline double fl(Op op, double a, double b, const FloatFormat& fmt) {
    double r = 0.0;
    switch (op) {
        case Op::add: r = a + b; break;
        case Op::sub: r = a - b; break;
        case Op::mul: r = a * b; break;
        case Op::div: r = a / b; break;
    }
    return round_to_format(r, fmt);
}

inline std::vector<double> round_vector(std::span<const double> v, const FloatFormat& fmt) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = round_to_format(v[i], fmt);
    return out;
}

}  // namespace krylovmp
