#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "qvlab/engine.hpp"
#include "qvlab/error.hpp"
#include "qvlab/quadvar.hpp"
#include "qvlab/surfaces.hpp"

using namespace qvlab;

namespace {
const double kTwoPi = 2.0 * M_PI;
}

TEST(Surfaces, ConstantIsFlat) {
    const auto s = VolSurface::constant(0.04);
    EXPECT_EQ(eval_sigma2(s, 50.0, 0.0), 0.04);
    EXPECT_EQ(eval_sigma2(s, 500.0, 17.0), 0.04);
    EXPECT_EQ(s.bound_M(), 0.04);
    EXPECT_EQ(s.lipschitz_K(), 0.0);
}

TEST(Surfaces, SeasonalPeakAndTrough) {
    const auto s = VolSurface::seasonal(0.04, 0.5, kTwoPi);
    EXPECT_NEAR(eval_sigma2(s, 100.0, 0.25), 0.06, 1e-15);
    EXPECT_NEAR(eval_sigma2(s, 100.0, 0.75), 0.02, 1e-15);
    EXPECT_NEAR(s.bound_M(), 0.06, 1e-15);
}

TEST(Surfaces, SmileAtReferencePriceIsAlpha) {
    const auto s = VolSurface::decaying_smile(0.04, 0.0, 1.0, 0.8, 1.0, 100.0);
    EXPECT_NEAR(eval_sigma2(s, 100.0, 0.0), 0.04, 1e-15);
    EXPECT_GT(eval_sigma2(s, 60.0, 0.0), 0.0);
}

TEST(Surfaces, ParameterBoundsAreEnforced) {
    EXPECT_THROW(VolSurface::decaying_smile(0.04, 0.0, 1.0, 1.0, 1.0, 100.0), ParameterError);
    EXPECT_THROW(VolSurface::seasonal(0.04, 1.0, 1.0), ParameterError);
    EXPECT_THROW(VolSurface::constant(0.0), ParameterError);
    EXPECT_THROW(surface_family_from_string("heston"), ConfigError);
}

TEST(Surfaces, DomainErrors) {
    const auto s = VolSurface::constant(0.04);
    EXPECT_THROW(eval_sigma2(s, 0.0, 1.0), DomainError);
    EXPECT_THROW(eval_sigma2(s, 100.0, -1.0), DomainError);
}

TEST(Envelope, SeasonalOverFullPeriodAveragesToAlpha) {
    const auto e = time_average_envelope(VolSurface::seasonal(0.04, 0.5, kTwoPi), 0.0, 1.0);
    EXPECT_NEAR(e.lower, 0.04, 1e-15);
    EXPECT_NEAR(e.upper, 0.04, 1e-15);
}

TEST(Envelope, SeasonalQuarterPeriod) {
    const auto e = time_average_envelope(VolSurface::seasonal(0.04, 0.5, kTwoPi), 0.0, 0.25);
    const double expected = 0.04 * (1.0 + 0.5 * (1.0 / kTwoPi) / 0.25);
    EXPECT_NEAR(e.lower, expected, 1e-14);
    EXPECT_NEAR(e.upper, expected, 1e-14);
    EXPECT_NEAR(expected, 0.05273, 5e-6);
}

TEST(Envelope, NumericalQuadratureOfSeasonalFactor) {
    // Midpoint rule on a fine grid as an independent check of the closed form.
    const auto s = VolSurface::seasonal(0.04, 0.3, 1.7);
    const double V = 0.4, T = 3.3;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += eval_sigma2(s, 100.0, V + (i + 0.5) * T / n);
    const auto e = time_average_envelope(s, V, T);
    EXPECT_NEAR(e.upper, sum / n, 1e-10);
}

TEST(Envelope, SmileEnvelopeDeviationWithinThetaOverT) {
    const auto s = VolSurface::decaying_smile(0.04, 0.2, 1.0, 0.8, 1.0, 100.0);
    for (double T : {1.0, 5.0, 25.0}) {
        const auto e = time_average_envelope(s, 0.0, T);
        EXPECT_LE(e.lower, e.upper);
        EXPECT_LE(e.upper - 0.04, s.envelope_theta() / T + 1e-15);
        EXPECT_LE(0.04 - e.lower, s.envelope_theta() / T + 1e-15);
    }
}

TEST(CapitalLambda, AnalyticFamilies) {
    EXPECT_NEAR(capital_lambda(VolSurface::constant(0.04), 10.0).value, 0.4, 1e-15);
    EXPECT_NEAR(capital_lambda(VolSurface::seasonal(0.04, 0.5, kTwoPi), 1.0).value, 0.04, 1e-15);
    EXPECT_EQ(capital_lambda(VolSurface::constant(0.04), 0.0).value, 0.0);
}

TEST(CapitalLambda, PriceDependentNeedsEnsemble) {
    const auto s = VolSurface::decaying_smile(0.04, 0.0, 1.0, 0.5, 1.0, 100.0);
    EXPECT_THROW(capital_lambda(s, 1.0), ConfigError);
}

TEST(RealizedQV, HandComputedIncrements) {
    PricePath two{{0.0, 1.0}, {100.0, 100.0 * std::exp(0.1)}};
    EXPECT_NEAR(realized_qv(two, 0.0, 1.0).qv, 0.01, 1e-15);
    PricePath three{{0.0, 1.0, 2.0}, {100.0, 100.0 * std::exp(0.1), 100.0}};
    const auto r = realized_qv(three, 0.0, 2.0);
    EXPECT_NEAR(r.qv, 0.02, 1e-15);
    EXPECT_NEAR(r.time_avg, 0.01, 1e-15);
}

TEST(RealizedQV, WindowMustCoverGridNodes) {
    PricePath p{{0.0, 1.0, 2.0}, {100.0, 101.0, 102.0}};
    EXPECT_THROW(realized_qv(p, 0.0, 1.5), RangeError);
    EXPECT_THROW(realized_qv(p, 0.0, 3.0), RangeError);
}

TEST(RealizedQV, EnsembleMeanIsAlpha) {
    const auto ens = simulate_price(VolSurface::constant(0.04), DriftSpec::risk_neutral(0.0), 100.0,
                                    PathGrid(0.0, 1e-3, 2000), 400, 4);
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < ens.n_paths(); ++i) {
        const double v = realized_qv(ens, i, 0.0, 2.0).time_avg;
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(ens.n_paths());
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - 0.04), 3.0 * se + 1e-6);
}

TEST(CheckBound, ExactAlphaPassesAndConstructedViolationFails) {
    const QVParams p{0.04, 0.1, 1.0, 1.0};
    std::vector<QVReport> reports{{0.0, 4.0, 0.16, 0.04}, {0.0, 4.0, 4.0 * (0.04 + 0.2 / 4.0), 0.04 + 0.2 / 4.0},
                                  {0.0, 0.5, 0.02, 0.04}};
    const auto checks = check_bound(reports, p);
    ASSERT_EQ(checks.size(), 3u);
    EXPECT_EQ(checks[0].status, BoundStatus::Pass);
    EXPECT_EQ(checks[1].status, BoundStatus::Fail);
    EXPECT_EQ(checks[2].status, BoundStatus::SkippedBelowOnset);
}

TEST(CheckBound, SeasonalIntegratedVariancePasses) {
    const auto surface = VolSurface::seasonal(0.04, 0.5, kTwoPi);
    const auto path = integrated_variance_path(surface, 100.0, PathGrid(0.0, 1e-3, 10000));
    const auto r = realized_qv(path, 0, 0.0, 10.0);
    const QVParams p{0.04, 2.0 * 0.04 * 0.5 / kTwoPi, 1.0, 1.0};
    const std::vector<QVReport> reports{r};
    EXPECT_EQ(check_bound(reports, p)[0].status, BoundStatus::Pass);
}

TEST(FitQV, RecoversSyntheticPowerLaw) {
    std::vector<QVReport> reports;
    for (double T : {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
        const double avg = 0.04 + 0.1 / T;
        reports.push_back({0.0, T, avg * T, avg});
    }
    const auto f = fit_qv_params(reports);
    ASSERT_TRUE(f.gamma_hat.has_value());
    EXPECT_NEAR(f.alpha_hat, 0.04, 1e-6);
    EXPECT_NEAR(*f.gamma_hat, 1.0, 1e-6);
    EXPECT_NEAR(f.theta_hat, 0.1, 1e-6);
}

TEST(FitQV, FlatReportsHaveNoGamma) {
    std::vector<QVReport> reports;
    for (double T : {1.0, 3.0, 10.0, 30.0}) reports.push_back({0.0, T, 0.04 * T, 0.04});
    const auto f = fit_qv_params(reports);
    EXPECT_EQ(f.alpha_hat, 0.04);
    EXPECT_FALSE(f.gamma_hat.has_value());
}

TEST(FitQV, TooFewWindows) {
    std::vector<QVReport> reports{{0.0, 1.0, 0.05, 0.05}, {0.0, 10.0, 0.41, 0.041}, {0.0, 100.0, 4.01, 0.0401}};
    EXPECT_THROW(fit_qv_params(reports), InsufficientDataError);
}

TEST(IngestCsv, ReadsNodesAndReportsBadLine) {
    std::istringstream good("t,price\n0,100\n1,110\n");
    EXPECT_EQ(ingest_price_csv(good).size(), 2u);
    std::istringstream bad("t,price\n0,100\n1,-5\n");
    try {
        ingest_price_csv(bad);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream backwards("t,price\n0,100\n0,101\n");
    EXPECT_THROW(ingest_price_csv(backwards), ParseError);
}

TEST(IngestCsv, RoundTripPreservesQV) {
    const auto ens = simulate_price(VolSurface::constant(0.04), DriftSpec::constant_mu(0.02), 100.0,
                                    PathGrid(0.0, 0.01, 200), 3, 6);
    const auto path = to_price_path(ens, 1);
    std::ostringstream out;
    out << "t,price\n";
    for (std::size_t k = 0; k < path.size(); ++k) out << format_g17(path.t[k]) << ',' << format_g17(path.price[k]) << '\n';
    std::istringstream in(out.str());
    const auto back = ingest_price_csv(in);
    EXPECT_NEAR(realized_qv(back, 0.0, 2.0).qv, realized_qv(ens, 1, 0.0, 2.0).qv, 1e-12);
}

TEST(EnsembleCsv, RoundTripIsExact) {
    const auto ens = simulate_price(VolSurface::constant(0.04), DriftSpec::constant_mu(0.02), 100.0,
                                    PathGrid(0.0, 0.25, 8), 4, 6);
    std::ostringstream out;
    write_ensemble_csv(out, ens);
    std::istringstream in(out.str());
    const auto back = read_ensemble_csv(in);
    EXPECT_EQ(back.values(), ens.values());
    EXPECT_EQ(back.n_paths(), 4u);
    EXPECT_EQ(back.seed(), ens.seed());
}
