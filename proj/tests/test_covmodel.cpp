#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "qvlab/covmodel.hpp"
#include "qvlab/engine.hpp"
#include "qvlab/error.hpp"

using namespace qvlab;

namespace {

const CovParams kCov{0.04, 0.01, std::nullopt};

// alpha t1 + beta t1 t2 written out by hand (Lambda = alpha t, reference 0).
double hand_cov(double a, double b, double t1, double t2) { return a * t1 + b * t1 * t2; }

// Covariance of X(a2)-X(a1) and X(b2)-X(b1) from the hand formula.
double increment_cov(double alpha, double beta, double a1, double a2, double b1, double b2) {
    const auto c = [&](double p, double q) { return hand_cov(alpha, beta, std::min(p, q), std::max(p, q)); };
    return c(a2, b2) - c(a2, b1) - c(a1, b2) + c(a1, b1);
}

EmpiricalCovariance synthetic(double alpha, double beta, const std::vector<double>& times) {
    EmpiricalCovariance e;
    e.times = times;
    const auto m = static_cast<Eigen::Index>(times.size());
    e.matrix.resize(m, m);
    e.std_err_matrix = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            e.matrix(i, j) = hand_cov(alpha, beta, std::min(times[i], times[j]), std::max(times[i], times[j]));
    e.entry_covariance = Eigen::MatrixXd::Zero(m * (m + 1) / 2, m * (m + 1) / 2);
    e.n_paths = 1000;
    return e;
}

}  // namespace

TEST(ModelCovariance, HandEvaluation) {
    const auto model = CovarianceModel::constant(kCov);
    EXPECT_NEAR(model_covariance(model, 0.0, 1.0, 2.0), 0.06, 1e-15);
    EXPECT_NEAR(model_covariance(model, 5.0, 1.0, 2.0), 0.06, 1e-15);
    EXPECT_EQ(model_covariance(model, 0.0, 0.0, 3.0), 0.0);
    const auto brownian = CovarianceModel::constant({0.04, 0.0, std::nullopt});
    EXPECT_NEAR(model_covariance(brownian, 0.0, 1.5, 7.0), 0.06, 1e-15);
    EXPECT_THROW(model_covariance(model, 0.0, 2.0, 1.0), DomainError);
}

TEST(ModelCovariance, MatrixIsSymmetric) {
    const std::vector<double> times{0.5, 1.0, 3.0};
    const auto m = model_covariance_matrix(CovarianceModel::constant(kCov), 0.0, times);
    EXPECT_TRUE(m.isApprox(m.transpose()));
    EXPECT_NEAR(m(2, 0), hand_cov(0.04, 0.01, 0.5, 3.0), 1e-15);
}

TEST(Asymptotic, Branches) {
    const auto a = asymptotic_covariance(kCov, 1.0, 1.0, 1.0, 100.0, 2.0);
    EXPECT_NEAR(a.value, 104.0, 1e-12);
    EXPECT_EQ(a.regime, CovRegime::GammaAboveOne);
    const auto b = asymptotic_covariance({0.04, 0.0, std::nullopt}, 1.0, 1.0, 1.0, 100.0, 2.0);
    EXPECT_NEAR(b.value, 4.0, 1e-12);
    EXPECT_EQ(b.regime, CovRegime::ZeroBeta);
    const auto c = asymptotic_covariance(kCov, 1.0, 1.0, 2.0, 100.0, 0.5);
    EXPECT_NEAR(c.value, 0.01 * 2.0 * 1e4, 1e-9);
    EXPECT_EQ(c.regime, CovRegime::GammaAtMostOne);
    EXPECT_THROW(asymptotic_covariance({0.04, -0.01, std::nullopt}, 1.0, 1.0, 1.0, 100.0, 2.0), ParameterError);
}

TEST(Asymptotic, RelativeGapShrinksWithHorizon) {
    const auto model = CovarianceModel::constant({0.04, 0.0, std::nullopt});
    const CovParams zero_beta{0.04, 0.0, std::nullopt};
    double previous = 1.0;
    for (double T : {10.0, 100.0, 1000.0}) {
        const double exact = model_covariance(model, T, 1.0 * T, 2.0 * T);
        const double approx = asymptotic_covariance(zero_beta, 1.0, 1.0, 2.0, T, 2.0).value;
        const double gap = std::abs(exact - approx) / exact;
        EXPECT_LE(gap, previous);
        previous = gap;
    }
}

TEST(Autocorr, AsymptoticHandValues) {
    EXPECT_NEAR(autocorr_asymptotic(kCov, AutocorrKind::Returns, 1.0, 2.0, 1.0, 100.0, 2.0), 0.96, 1e-12);
    EXPECT_NEAR(autocorr_asymptotic(kCov, AutocorrKind::SquaredReturns, 1.0, 2.0, 1.0, 100.0, 2.0), 0.92, 1e-12);
    const CovParams zero{0.04, 0.0, std::nullopt};
    EXPECT_EQ(autocorr_asymptotic(zero, AutocorrKind::Returns, 1.0, 2.0, 1.0, 100.0, 2.0), 0.0);
    EXPECT_EQ(autocorr_asymptotic(zero, AutocorrKind::SquaredReturns, 1.0, 2.0, 1.0, 100.0, 2.0), 0.0);
    EXPECT_THROW(autocorr_asymptotic(kCov, AutocorrKind::Returns, 1.0, 0.5, 1.0, 100.0, 2.0), Error);
    EXPECT_THROW(autocorr_asymptotic(kCov, AutocorrKind::Returns, 2.0, 2.0, 1.0, 100.0, 2.0), Error);
}

TEST(Autocorr, ExactMatchesIncrementAlgebra) {
    const double s = 1.0, t = 2.0, u = 1.0, T = 100.0;
    const double a1 = t * T, a2 = (t + s) * T, b1 = (t + u) * T, b2 = (t + u + s) * T;
    const double c12 = increment_cov(0.04, 0.01, a1, a2, b1, b2);
    const double v1 = increment_cov(0.04, 0.01, a1, a2, a1, a2);
    const double v2 = increment_cov(0.04, 0.01, b1, b2, b1, b2);
    const double rho = c12 / std::sqrt(v1 * v2);
    const auto model = CovarianceModel::constant(kCov);
    EXPECT_NEAR(autocorr_exact(model, AutocorrKind::Returns, 0.0, s, t, u, T), rho, 1e-12);
    EXPECT_NEAR(autocorr_exact(model, AutocorrKind::SquaredReturns, 0.0, s, t, u, T), rho * rho, 1e-12);
    EXPECT_NEAR(rho, 1.0 / 1.04, 1e-12);
}

TEST(EmpiricalCovariance, MatchesModelWithinThreeSE) {
    const auto ens = simulate_centered_returns(kCov, VolSurface::constant(0.04), PathGrid(0.0, 0.05, 140), 40000, 31);
    const std::vector<double> times{1.0, 2.0};
    for (double z : {0.0, 5.0}) {
        const auto emp = empirical_covariance(ens, z, times);
        EXPECT_LE(std::abs(emp.value(1.0, 2.0) - 0.06), 3.0 * emp.std_err_matrix(0, 1)) << "z = " << z;
        EXPECT_LE(std::abs(emp.value(1.0, 1.0) - 0.05), 3.0 * emp.std_err_matrix(0, 0)) << "z = " << z;
    }
}

TEST(EmpiricalCovariance, JackknifeMatchesBruteForce) {
    const auto ens = simulate_centered_returns(kCov, VolSurface::constant(0.04), PathGrid(0.0, 0.5, 4), 40, 32);
    const std::vector<double> times{1.0, 2.0};
    const auto emp = empirical_covariance(ens, 0.0, times);
    // Delete-one recomputation of the (1, 2) entry.
    const std::size_t n = ens.n_paths();
    std::vector<double> loo(n);
    for (std::size_t drop = 0; drop < n; ++drop) {
        double s1 = 0, s2 = 0, s12 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == drop) continue;
            s1 += ens.at(i, 2);
            s2 += ens.at(i, 4);
            s12 += ens.at(i, 2) * ens.at(i, 4);
        }
        const double m = static_cast<double>(n - 1);
        loo[drop] = (s12 - s1 * s2 / m) / (m - 1.0);
    }
    double mean = 0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
    EXPECT_NEAR(emp.std_err_matrix(0, 1), se, 1e-12);
}

TEST(EmpiricalCovariance, DegenerateAndInvalidInputs) {
    const auto ens = simulate_centered_returns(kCov, VolSurface::constant(0.04), PathGrid(0.0, 0.5, 4), 40, 33);
    const std::vector<double> zero{0.0};
    EXPECT_EQ(empirical_covariance(ens, 0.0, zero).matrix(0, 0), 0.0);
    const std::vector<double> off{0.7};
    EXPECT_THROW(empirical_covariance(ens, 0.0, off), RangeError);
    const auto few = simulate_centered_returns(kCov, VolSurface::constant(0.04), PathGrid(0.0, 0.5, 4), 10, 33);
    const std::vector<double> one{1.0};
    EXPECT_THROW(empirical_covariance(few, 0.0, one), InsufficientDataError);
}

TEST(Wsm, ModelCovarianceHasZeroResidual) {
    for (const auto& cov : {kCov, CovParams{0.09, 0.3, std::nullopt}, CovParams{0.04, 0.0, std::nullopt}}) {
        const auto r = covariance_fn(CovarianceModel::constant(cov), 0.0);
        EXPECT_LE(std::abs(wsm_residual(r, 0.5, 1.0, 4.0)), 1e-12);
        EXPECT_LE(std::abs(wsm_residual(r, 1.0, 1.0, 2.0)), 1e-12);
    }
}

TEST(Wsm, CorruptedEntryGivesHandResidual) {
    const auto base = covariance_fn(CovarianceModel::constant(kCov), 0.0);
    const double t1 = 1.0, t3 = 3.0;
    const CovarianceFn bent = [&](double a, double b) { return base(a, b) * ((a == t1 && b == t3) ? 1.1 : 1.0); };
    const double y13 = base(t1, t3) / base(t1, t1);
    EXPECT_NEAR(wsm_residual(bent, t1, 2.0, t3), -0.1 * y13, 1e-12);
}

TEST(Wsm, DegenerateInputs) {
    const auto r = covariance_fn(CovarianceModel::constant(kCov), 0.0);
    EXPECT_THROW(wsm_residual(r, 0.0, 1.0, 2.0), DomainError);
    const CovarianceFn flat = [](double, double) { return 0.0; };
    EXPECT_THROW(wsm_residual(flat, 1.0, 2.0, 3.0), SingularError);
}

TEST(FitCov, RecoversNoiselessSynthetic) {
    const auto fit = fit_cov_params(synthetic(0.04, 0.01, {1.0, 2.0, 4.0, 8.0}));
    EXPECT_NEAR(fit.params.alpha, 0.04, 1e-10);
    EXPECT_NEAR(fit.params.beta, 0.01, 1e-10);
    EXPECT_FALSE(fit.beta_clamped);
    EXPECT_EQ(fit.n_entries, 10u);
}

TEST(FitCov, BrownianSyntheticHasZeroBeta) {
    const auto fit = fit_cov_params(synthetic(0.04, 0.0, {1.0, 2.0, 3.0}));
    EXPECT_NEAR(fit.params.alpha, 0.04, 1e-12);
    EXPECT_NEAR(fit.params.beta, 0.0, 1e-12);
}

TEST(FitCov, NegativeBetaOnUnboundedDomainIsClamped) {
    const auto fit = fit_cov_params(synthetic(0.04, -0.001, {1.0, 2.0, 3.0}));
    EXPECT_TRUE(fit.beta_clamped);
    EXPECT_EQ(fit.params.beta, 0.0);
    EXPECT_LT(fit.beta_raw, 0.0);
    const auto bounded = fit_cov_params(synthetic(0.04, -0.001, {1.0, 2.0, 3.0}), 10.0);
    EXPECT_FALSE(bounded.beta_clamped);
    EXPECT_NEAR(bounded.params.beta, -0.001, 1e-12);
}

TEST(FitCov, DegenerateDesignRejected) {
    EXPECT_THROW(fit_cov_params(synthetic(0.04, 0.01, {1.0, 2.0})), InsufficientDataError);
}

TEST(FitCov, SimulatedEnsembleWithinThreeSE) {
    const auto ens =
        simulate_centered_returns(kCov, VolSurface::constant(0.04), PathGrid(0.0, 0.1, 80), 100000, 34);
    const auto emp = empirical_covariance(ens, 0.0, std::vector<double>{1.0, 2.0, 4.0, 8.0});
    const auto fit = fit_cov_params(emp);
    EXPECT_LE(std::abs(fit.params.alpha - 0.04), 3.0 * fit.alpha_std_err);
    EXPECT_LE(std::abs(fit.params.beta - 0.01), 3.0 * fit.beta_std_err);
}

TEST(CovarianceCsv, HeaderAndEntries) {
    const auto e = synthetic(0.04, 0.01, {1.0, 2.0});
    std::ostringstream out;
    write_covariance_csv(out, e);
    const auto text = out.str();
    EXPECT_NE(text.find("t_i,t_j,value,std_err"), std::string::npos);
    EXPECT_NE(text.find("\n1,2,"), std::string::npos);
    EXPECT_NE(text.find("\n2,2,"), std::string::npos);
}
