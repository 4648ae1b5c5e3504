#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvlab/engine.hpp"
#include "qvlab/pricing.hpp"

namespace qvlab {

enum class ForecastVariant { Limit, CorrectedGammaGT1 };

std::string to_string(ForecastVariant variant);

/// Gaussian law of the scaled centered returns Xbar((z + t_i) T) / sqrt(T)
/// given Xbar(z T) / sqrt(T) = x.
struct ForecastDistribution {
    std::vector<double> times;  ///< offsets t_i in units of T, sorted, > 0
    Eigen::VectorXd mean;       ///< psi
    Eigen::MatrixXd cov;        ///< Theta
    ForecastVariant variant = ForecastVariant::Limit;
    double z = 0.0;
    double x = 0.0;
    double T = 1.0;
    double alpha = 0.0;
};

/// psi_i = ((z + t_i) / z) x, Theta_ij = t_i (z + t_j) / z * alpha for i <= j.
/// SingularError for z = 0.
ForecastDistribution limit_forecast(double x, double z, std::span<const double> times,
                                    double alpha);

/// Finite-T correction for gamma > 1:
///   psi_i   = ((z + t_i)/z - alpha t_i / (beta z^2 T)) x
///   Theta_ij = alpha t_i (z + t_j)/z - alpha^2 t_i t_j / (beta z^2 T).
/// gamma <= 1 returns the Limit variant. RegimeError when the corrected Theta
/// is not positive semidefinite (use exact conditional simulation instead).
ForecastDistribution corrected_forecast(double x, double z, std::span<const double> times,
                                        const CovParams& cov, double T, double gamma);

/// Throws RegimeError unless the smallest eigenvalue of m is >= -1e-10 trace.
void require_psd(const Eigen::MatrixXd& m, const char* what);

/// Joint Gaussian law of log S at the forecast times.
struct PriceForecast {
    std::vector<double> times;   ///< offsets t_i in units of T
    Eigen::VectorXd mean_log;    ///< E log S((z + t_i) T)
    Eigen::MatrixXd cov_log;     ///< Cov(log S_i, log S_j)
    double s_z = 0.0;
    double T = 1.0;
};

/// log S((z+t_i)T) = log s0 + lambda0((z+t_i)T) + sqrt(T) psi_i, covariance
/// T Theta. ConfigError when the forecast's x disagrees with
/// (log(s_z/s0) - lambda0(zT)) / sqrt(T).
PriceForecast lognormal_price_forecast(double s0, double s_z, const MeanLogReturn& lambda0,
                                       const ForecastDistribution& forecast);

/// Short-horizon form: log(S((z+t)T)/s_z) ~ N(m_bar - alpha t T / 2, alpha t T),
/// with m_bar the user's expected return over the window.
PriceForecast short_horizon_price_forecast(double s_z, double m_bar, double alpha,
                                           std::span<const double> times, double T);

enum class InstrumentKind { UnderlyingShare, EuropeanOption };

/// A signed holding. Shares pay S at `pay_time`; options pay at their expiry.
/// Times are offsets in units of T after the forecast origin z T.
struct Position {
    double quantity = 1.0;
    InstrumentKind instrument = InstrumentKind::EuropeanOption;
    OptionSpec option;        ///< Call, Put or Forward
    double pay_time = 0.0;    ///< share payoff time

    double payoff_time() const {
        return instrument == InstrumentKind::UnderlyingShare ? pay_time : option.expiry;
    }
};

struct Portfolio {
    std::vector<Position> positions;
};

enum class PVMethod { MonteCarlo, ClosedFormCheck };

std::string to_string(PVMethod method);

struct PVReport {
    double mean_pv = 0.0;
    double var_pv = 0.0;
    double std_err = 0.0;  ///< sqrt(var_pv / n)
    std::size_t n_samples = 0;
    PVMethod method = PVMethod::MonteCarlo;
    /// Single-call portfolios: closed-form log-normal value and whether the
    /// MC mean is within 3 standard errors of it.
    std::optional<double> closed_form;
    std::optional<bool> closed_form_pass;
};

/// Discounted log-normal expectation e^{-r t T} E (S - K)^+ with
/// log S ~ N(m, v).
double lognormal_call_value(double mean_log, double var_log, double strike, double discount);

/// Samples the joint Gaussian forecast and averages
/// sum quantity_i e^{-r tau_i T} payoff_i, where tau_i is the payoff offset.
/// ConfigError when a payoff time is not a forecast time.
PVReport portfolio_pv(const Portfolio& portfolio, const PriceForecast& forecast, double r,
                      std::size_t n_samples, std::uint64_t seed);

/// CSV `quantity,kind,strike,expiry` where kind is share|call|put|forward.
/// For shares the expiry column is the payoff time and strike is ignored.
Portfolio read_portfolio_csv(std::istream& in);

struct CltAudit {
    std::vector<double> ks;          ///< per coordinate
    double ks_critical = 0.0;        ///< 1% level, 1.628 / sqrt(n)
    Eigen::MatrixXd sample_cov;
    Eigen::MatrixXd cov_std_err;
    Eigen::VectorXd sample_mean;
    Eigen::VectorXd mean_std_err;
    double worst_cov_z = 0.0;   ///< max |sample - Theta| / SE over entries
    double worst_mean_z = 0.0;  ///< max |sample mean - psi| / SE
    bool ks_pass = false;
    bool moments_pass = false;
    bool pass = false;
};

/// Kolmogorov-Smirnov statistic of a sample against N(0, 1).
double ks_statistic_normal(std::vector<double> standardized);

/// Compares conditional samples of scaled returns (values / sqrt(T)) with a
/// forecast. Horizons must equal (z + t_i) T. ConfigError on shape mismatch.
CltAudit clt_audit(const ConditionalSamples& samples, const ForecastDistribution& forecast);

}  // namespace qvlab
