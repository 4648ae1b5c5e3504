#include <cmath>
#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

#include "qvlab/engine.hpp"
#include "qvlab/error.hpp"
#include "qvlab/parallel.hpp"
#include "qvlab/rng.hpp"

using namespace qvlab;

// Known-answer vectors published with the Random123 library.
TEST(Philox, KnownAnswerZero) {
    const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                          {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
    const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                          {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(NormalStream, SubstreamsAreReproducibleAndDistinct) {
    NormalStream a(42, 3), b(42, 3), c(42, 4);
    for (int i = 0; i < 100; ++i) {
        const double x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
}

TEST(NormalStream, MomentsOfStandardNormal) {
    NormalStream s(derive_seed(1, "moments"), 0);
    const int n = 200000;
    double m1 = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = s.next();
        m1 += x;
        m2 += x * x;
        m4 += x * x * x * x;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(DeriveSeed, LabelsSeparateStreams) {
    EXPECT_NE(derive_seed(7, "paths"), derive_seed(7, "ivsurface"));
    EXPECT_EQ(derive_seed(7, "paths"), derive_seed(7, "paths"));
    EXPECT_NE(derive_seed(7, "paths"), derive_seed(8, "paths"));
}

TEST(Parallel, CoversRangeOnce) {
    std::vector<int> hits(1001, 0);
    parallel_for(hits.size(), 4, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Parallel, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t b, std::size_t) {
                                  if (b == 0) throw DomainError("boom");
                              }),
                 DomainError);
}

TEST(SimulatePrice, ForcedZeroNoiseIsDeterministicDrift) {
    SimOptions opt;
    opt.forced_noise = [](std::size_t, std::size_t) { return 0.0; };
    const auto ens = simulate_price(VolSurface::constant(0.04), DriftSpec::risk_neutral(0.0), 100.0,
                                    PathGrid(0.0, 1.0, 1), 1, 1, opt);
    EXPECT_NEAR(ens.at(0, 1), 100.0 * std::exp(-0.02), 1e-12);
}

TEST(SimulatePrice, DiscountedMeanIsMartingale) {
    const double r = 0.05;
    const auto ens = simulate_price(VolSurface::constant(0.04), DriftSpec::risk_neutral(r), 100.0,
                                    PathGrid(0.0, 0.01, 100), 100000, 99);
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < ens.n_paths(); ++i) {
        const double v = std::exp(-r) * ens.at(i, 100);
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(ens.n_paths());
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - 100.0), 3.0 * se);
}

TEST(SimulatePrice, ThreadCountDoesNotChangeResults) {
    const auto surface = VolSurface::seasonal(0.04, 0.5, 2.0 * M_PI);
    SimOptions one, eight;
    one.threads = 1;
    eight.threads = 8;
    const PathGrid grid(0.0, 0.01, 50);
    const auto a = simulate_price(surface, DriftSpec::constant_mu(0.03), 100.0, grid, 257, 5, one);
    const auto b = simulate_price(surface, DriftSpec::constant_mu(0.03), 100.0, grid, 257, 5, eight);
    EXPECT_EQ(a.values(), b.values());
}

TEST(SimulatePrice, BatchesMatchSingleRun) {
    const auto surface = VolSurface::constant(0.04);
    const PathGrid grid(0.0, 0.1, 10);
    const auto whole = simulate_price(surface, DriftSpec::risk_neutral(0.01), 100.0, grid, 20, 5);
    SimOptions tail;
    tail.first_path = 12;
    const auto part = simulate_price(surface, DriftSpec::risk_neutral(0.01), 100.0, grid, 8, 5, tail);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t k = 0; k <= 10; ++k) EXPECT_EQ(part.at(i, k), whole.at(12 + i, k));
}

TEST(CenteredReturns, ForcedZeroNoiseStaysAtZero) {
    SimOptions opt;
    opt.forced_noise = [](std::size_t, std::size_t) { return 0.0; };
    const auto ens = simulate_centered_returns({0.04, 0.01, std::nullopt}, VolSurface::constant(0.04),
                                               PathGrid(0.0, 0.5, 1), 1, 1, opt);
    EXPECT_EQ(ens.at(0, 1), 0.0);
}

TEST(CenteredReturns, BrownianVarianceIsAlphaT) {
    const auto ens = simulate_centered_returns({0.04, 0.0, std::nullopt}, VolSurface::constant(0.04),
                                               PathGrid(0.0, 0.1, 20), 40000, 17);
    double sq = 0, q4 = 0;
    for (std::size_t i = 0; i < ens.n_paths(); ++i) {
        const double x = ens.at(i, 20);
        sq += x * x;
        q4 += x * x * x * x;
    }
    const double n = static_cast<double>(ens.n_paths());
    const double var = sq / n;
    const double se = std::sqrt((q4 / n - var * var) / n);
    EXPECT_LE(std::abs(var - 0.08), 3.0 * se);
}

TEST(CenteredReturns, IllegalBetaIsRejected) {
    // beta < 0 without a bounded domain makes g vanish.
    EXPECT_THROW(simulate_centered_returns({0.04, -0.01, std::nullopt}, VolSurface::constant(0.04),
                                           PathGrid(0.0, 0.1, 10), 10, 1),
                 ParameterError);
}

TEST(DriftFromGrowth, ZeroBetaIsConstantRatePlusHalfVariance) {
    const auto d = drift_from_growth({0.04, 0.0, std::nullopt}, VolSurface::constant(0.04),
                                     MeanLogReturn::constant_rate(0.03), 100.0);
    EXPECT_NEAR(d.mu(80.0, 2.0, 0.04), 0.03 + 0.02, 1e-15);
    EXPECT_NEAR(d.mu(120.0, 5.0, 0.04), 0.03 + 0.02, 1e-15);
}

TEST(DriftFromGrowth, AtStartingPriceLogTermVanishes) {
    const auto d = drift_from_growth({0.04, 0.01, std::nullopt}, VolSurface::constant(0.04),
                                     MeanLogReturn::zero(), 100.0);
    EXPECT_NEAR(d.mu(100.0, 3.0, 0.04), 0.02, 1e-15);
}

TEST(ConditionalSampling, ZeroConditionBrownianRestart) {
    const std::vector<double> horizons{1.5, 3.0};
    const auto s = simulate_canonical_conditional({0.04, 0.0, std::nullopt}, VolSurface::constant(0.04), 1.0,
                                                  0.0, horizons, 40000, 8);
    ASSERT_TRUE(s.exact);
    for (std::size_t j = 0; j < horizons.size(); ++j) {
        const auto col = s.column(j);
        double sq = 0, q4 = 0;
        for (double v : col) {
            sq += v * v;
            q4 += v * v * v * v;
        }
        const double n = static_cast<double>(col.size());
        const double var = sq / n;
        const double se = std::sqrt((q4 / n - var * var) / n);
        EXPECT_LE(std::abs(var - 0.04 * (horizons[j] - 1.0)), 3.0 * se) << "horizon " << horizons[j];
    }
}
