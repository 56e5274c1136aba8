#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "krylovmp/fpx.hpp"
#include "test_support.hpp"

namespace km = krylovmp;
using km::testing::binary16;
using km::testing::bfloat16_bits;

namespace {

bool same(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST(FloatFormat, UnitRoundoffMatchesTable) {
    EXPECT_EQ(km::fp64.unit_roundoff(), std::ldexp(1.0, -53));
    EXPECT_EQ(km::fp32.unit_roundoff(), std::ldexp(1.0, -24));
    EXPECT_EQ(km::fp16.unit_roundoff(), std::ldexp(1.0, -11));
    EXPECT_EQ(km::bfloat16.unit_roundoff(), std::ldexp(1.0, -8));
    EXPECT_NEAR(km::bfloat16.unit_roundoff(), 3.91e-3, 0.01e-3);
    EXPECT_NEAR(km::fp16.unit_roundoff(), 4.88e-4, 0.01e-4);
    EXPECT_NEAR(km::fp32.unit_roundoff(), 5.96e-8, 0.01e-8);
    EXPECT_NEAR(km::fp64.unit_roundoff(), 1.11e-16, 0.01e-16);
}

TEST(FloatFormat, SubnormalAndRangeLimits) {
    EXPECT_EQ(km::fp16.min_subnormal(), std::ldexp(1.0, -24));
    EXPECT_EQ(km::fp16.min_normal(), std::ldexp(1.0, -14));
    EXPECT_EQ(km::fp16.max_finite(), 65504.0);
    EXPECT_EQ(km::bfloat16.min_subnormal(), std::ldexp(1.0, -133));
    EXPECT_NEAR(km::bfloat16.min_subnormal() / 9.18e-41, 1.0, 1e-3);
    EXPECT_NEAR(km::fp32.min_subnormal() / 1.40e-45, 1.0, 1e-2);
    EXPECT_EQ(km::fp32.max_finite(), static_cast<double>(std::numeric_limits<float>::max()));
    EXPECT_EQ(km::fp64.min_subnormal(), std::numeric_limits<double>::denorm_min());
    EXPECT_EQ(km::fp64.max_finite(), std::numeric_limits<double>::max());
}

TEST(FloatFormat, LookupByName) {
    ASSERT_TRUE(km::format_by_name("bfloat16"));
    EXPECT_EQ(*km::format_by_name("fp16"), km::fp16);
    EXPECT_FALSE(km::format_by_name("fp8"));
    EXPECT_FALSE(km::format_by_name("FP16"));
}

TEST(RoundToFormat, TieGoesToEvenMantissa) {
    EXPECT_EQ(km::round_to_format(1.0 + std::ldexp(1.0, -9), km::bfloat16), 1.0);
    EXPECT_EQ(km::round_to_format(1.0 + 3 * std::ldexp(1.0, -8), km::bfloat16), 1.0 + std::ldexp(1.0, -6));
}

TEST(RoundToFormat, SmallestSubnormalOfHalf) {
    EXPECT_EQ(km::round_to_format(5.96e-8, km::fp16), km::fp16.min_subnormal());
}

TEST(RoundToFormat, OverflowToInfinity) {
    EXPECT_EQ(km::round_to_format(70000.0, km::fp16), std::numeric_limits<double>::infinity());
    EXPECT_EQ(km::round_to_format(65519.99, km::fp16), 65504.0);
    EXPECT_EQ(km::round_to_format(65520.0, km::fp16), std::numeric_limits<double>::infinity());
}

TEST(RoundToFormat, IdentityOnBinary64) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double x = std::bit_cast<double>(rng());
        EXPECT_TRUE(same(km::round_to_format(x, km::fp64), x));
    }
}

TEST(RoundToFormat, NonFiniteAndSignedZeroPassThrough) {
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(km::round_to_format(inf, km::fp16), inf);
    EXPECT_EQ(km::round_to_format(-inf, km::bfloat16), -inf);
    EXPECT_TRUE(std::isnan(km::round_to_format(std::nan(""), km::fp32)));
    EXPECT_TRUE(std::signbit(km::round_to_format(-0.0, km::fp16)));
    EXPECT_TRUE(std::signbit(km::round_to_format(-1e-30, km::fp16)));
}

TEST(RoundToFormat, SinglePrecisionMatchesHardwareConversion) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> ex(-160, 130);
    std::uniform_int_distribution<std::uint64_t> frac(0, (std::uint64_t{1} << 52) - 1);
    for (int i = 0; i < 200000; ++i) {
        const auto bits = (static_cast<std::uint64_t>(ex(rng) + 1023) << 52) | frac(rng);
        const double x = std::bit_cast<double>(bits);
        ASSERT_TRUE(same(km::round_to_format(x, km::fp32), static_cast<double>(static_cast<float>(x)))) << x;
    }
}

TEST(RoundToFormat, HalfAgreesWithBitReferenceOnAllPatterns) {
    for (std::uint64_t p = 0; p < 65536; ++p) {
        const double v = km::testing::decode(p, binary16);
        ASSERT_TRUE(same(km::round_to_format(v, km::fp16), v)) << p;
        if (!std::isnan(v)) {
            ASSERT_EQ(km::testing::encode_nearest(v, binary16), p);
        }
    }
}

TEST(RoundToFormat, BfloatAgreesWithBitReferenceOnAllPatterns) {
    for (std::uint64_t p = 0; p < 65536; ++p) {
        const double v = km::testing::decode(p, bfloat16_bits);
        ASSERT_TRUE(same(km::round_to_format(v, km::bfloat16), v)) << p;
        if (!std::isnan(v)) {
            ASSERT_EQ(km::testing::encode_nearest(v, bfloat16_bits), p);
        }
    }
}

TEST(RoundToFormat, AgreesWithBitReferenceOnRandomInputs) {
    km::testing::NarrowFormatSampler h(binary16, 21), b(bfloat16_bits, 22);
    for (int i = 0; i < 100000; ++i) {
        const double x = h();
        ASSERT_TRUE(same(km::round_to_format(x, km::fp16), km::testing::reference_round(x, binary16))) << x;
        const double y = b();
        ASSERT_TRUE(same(km::round_to_format(y, km::bfloat16), km::testing::reference_round(y, bfloat16_bits)))
            << y;
    }
}

TEST(RoundToFormat, IdempotentMonotoneSymmetric) {
    for (const auto& fmt : {km::fp32, km::fp16, km::bfloat16}) {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 20000; ++i) {
            const double x = u(rng) * std::ldexp(1.0, static_cast<int>(u(rng) * 40));
            const double y = u(rng) * std::ldexp(1.0, static_cast<int>(u(rng) * 40));
            const double rx = km::round_to_format(x, fmt);
            ASSERT_TRUE(same(km::round_to_format(rx, fmt), rx));
            ASSERT_TRUE(same(km::round_to_format(-x, fmt), -rx));
            if (x <= y) {
                ASSERT_LE(rx, km::round_to_format(y, fmt));
            }
        }
    }
}

TEST(Fl, AbsorbedAddend) {
    const double tiny = km::round_to_format(km::fp16.unit_roundoff() / 2, km::fp16);
    EXPECT_EQ(km::fl(km::Op::add, 1.0, tiny, km::fp16), 1.0);
}

TEST(Fl, ProductsNearTheSubnormalFloor) {
    // 2^-13 * 2^-13 = 2^-26 is a quarter of the smallest subnormal and
    // flushes to zero; 2^-12 * 2^-12 lands exactly on it.
    const double h = std::ldexp(1.0, -13);
    EXPECT_EQ(km::fl(km::Op::mul, h, h, km::fp16), 0.0);
    EXPECT_EQ(km::testing::reference_round(h * h, binary16), 0.0);
    EXPECT_EQ(km::fl(km::Op::mul, std::ldexp(1.0, -12), std::ldexp(1.0, -12), km::fp16), std::ldexp(1.0, -24));
    EXPECT_EQ(km::fl(km::Op::mul, std::ldexp(1.0, -12), std::ldexp(1.5, -12), km::fp16), std::ldexp(2.0, -24));
}

TEST(Fl, SinglePrecisionDivision) {
    EXPECT_EQ(km::fl(km::Op::div, 1.0, 3.0, km::fp32), 0.3333333432674407958984375);
    EXPECT_EQ(km::fl(km::Op::sub, 1.0, 1.0, km::fp16), 0.0);
}

TEST(RoundVector, Examples) {
    const std::vector<double> a{1.0, 0.0};
    EXPECT_EQ(km::round_vector(a, km::fp16), a);
    const std::vector<double> tiny{1e-10};
    EXPECT_EQ(km::round_vector(tiny, km::fp16), std::vector<double>{0.0});
    const std::vector<double> big{-65520.0};
    EXPECT_EQ(km::round_vector(big, km::fp16)[0], -std::numeric_limits<double>::infinity());
}
