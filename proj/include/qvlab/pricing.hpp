#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qvlab/engine.hpp"
#include "qvlab/paths.hpp"
#include "qvlab/quadvar.hpp"
#include "qvlab/surfaces.hpp"

namespace qvlab {

enum class OptionKind { Call, Put, Forward, VarianceCall, VariancePut };

std::string to_string(OptionKind kind);
OptionKind option_kind_from_string(const std::string& s);

/// European claim. Strike is a price for Call/Put/Forward and a variance rate
/// for the variance kinds; expiry is an offset from the valuation time.
struct OptionSpec {
    OptionKind kind = OptionKind::Call;
    double strike = 100.0;
    double expiry = 1.0;

    void validate() const;
};

/// Undiscounted payoff of a price option at terminal price s.
double option_payoff(OptionKind kind, double strike, double s);

struct PriceEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n_paths = 0;
};

/// Combines estimates from disjoint batches of paths into one (exact pooled
/// mean and sample variance).
PriceEstimate pool_estimates(std::span<const PriceEstimate> parts);

double normal_cdf(double x);
double normal_pdf(double x);

/// Black-Scholes value of a European call or put.
double bs_price(double s, double strike, double r, double sigma, double tau, OptionKind kind);
/// dPrice/dsigma (same for calls and puts).
double bs_vega(double s, double strike, double r, double sigma, double tau);

/// Implied volatility by bracketed bisection (width 1e-12) and a Newton
/// polish kept inside the bracket. Throws OutOfBandError when the price is
/// not strictly inside the no-arbitrage band.
double bs_implied_vol(double price, double s, double strike, double r, double tau, OptionKind kind);

/// Discounted Monte Carlo price over a risk-neutral ensemble. Variance kinds
/// use the realized QV over [t_start, t_start + expiry] on each path.
PriceEstimate mc_price(const PathEnsemble& ensemble, const OptionSpec& option, double r);

/// s0 - strike e^{-r tau}.
double forward_price(double s0, double strike, double r, double tau);

struct ParityAudit {
    double max_pathwise_residual = 0.0;  ///< max over paths of |(S-C)+ - (C-S)+ - (S-C)| / max(S, C)
    double max_abs_residual = 0.0;       ///< same without the scale
    double aggregate_residual = 0.0;     ///< |mc call - mc put - mc forward| / scale
    double martingale_gap = 0.0;         ///< mc forward - forward_price (statistical)
    double martingale_std_err = 0.0;
    double scale = 0.0;
    bool pass = false;  ///< both exact residuals <= 1e-12
};

ParityAudit parity_audit(const PathEnsemble& ensemble, double strike, double expiry, double r);

/// Tolerance constant of the variance-option zero-price audit: the price of a
/// variance call struck exactly at the realized mean, alpha / sqrt(pi) times
/// sqrt(dt / T), evaluated for the reference Constant(0.04) family. The
/// discrete QV / T carries N(0, 2 alpha^2 dt / T) noise, whose positive part
/// has mean alpha sqrt(dt / T) / sqrt(pi).
inline constexpr double kVarianceAuditKappa = 0.022567583341910252;

struct VarianceAudit {
    double upper_strike = 0.0;  ///< alpha + theta / T^gamma
    double lower_strike = 0.0;  ///< alpha - theta / T^gamma
    PriceEstimate call_at_upper;
    PriceEstimate put_at_lower;
    double tolerance = 0.0;  ///< kappa sqrt(dt / T)
    bool pass = false;
};

/// Prices the variance call struck at the upper bound and the variance put
/// struck at the lower bound; both must be ~0 for an arbitrage-free surface.
VarianceAudit variance_strike_zero_audit(const PathEnsemble& ensemble, const QVParams& qv,
                                         double T, double r,
                                         double kappa = kVarianceAuditKappa);

struct ImpliedVolSurfacePoint {
    double expiry_T = 0.0;
    double strike = 0.0;
    OptionKind kind = OptionKind::Call;  ///< out-of-the-money side actually priced
    double price = 0.0;
    double std_err = 0.0;
    double iv = 0.0;
    double iv2 = 0.0;
    double iv_std_err = 0.0;
    double iv2_std_err = 0.0;
    std::string flag = "ok";  ///< ok | out_of_band_lower | out_of_band_upper

    bool ok() const noexcept { return flag == "ok"; }
};

struct MarketSpec {
    double s0 = 100.0;
    double r = 0.0;
};

struct IvSurfaceOptions {
    double dt = 0.01;
    SimOptions sim;
};

/// Implied volatilities on a strike x expiry grid from one risk-neutral
/// ensemble (common random numbers). Each point prices the OTM side (put
/// below the forward, call at or above), which has the same implied vol by
/// parity. Points whose MC price leaves the invertible band are flagged.
std::vector<ImpliedVolSurfacePoint> implied_vol_surface(const VolSurface& surface,
                                                        const MarketSpec& market,
                                                        std::span<const double> strikes,
                                                        std::span<const double> expiries,
                                                        std::size_t n_paths, std::uint64_t seed,
                                                        const IvSurfaceOptions& options = {});

/// Same, from an existing risk-neutral ensemble.
std::vector<ImpliedVolSurfacePoint> implied_vol_points(const PathEnsemble& ensemble,
                                                       const MarketSpec& market,
                                                       std::span<const double> strikes,
                                                       std::span<const double> expiries);

struct AuditLine {
    std::string check;
    double margin = 0.0;  ///< >= 0 means pass
    bool pass = false;
};

struct SandwichReport {
    std::vector<AuditLine> lines;
    double worst_margin = 0.0;
    bool pass = false;
};

/// Every unflagged iv2 must lie in [lower, upper] of the time-average
/// envelope over [0, T], widened by `n_se` inverted standard errors.
SandwichReport envelope_sandwich_report(std::span<const ImpliedVolSurfacePoint> points,
                                        const VolSurface& surface, double n_se = 3.0);

/// For T >= T0: |iv2 - alpha| <= theta / T^gamma + n_se * iv2_std_err.
/// Expiries below T0 are excluded.
SandwichReport flattening_report(std::span<const ImpliedVolSurfacePoint> points,
                                 const QVParams& qv, double n_se = 3.0);

/// max - min of iv2 across unflagged strikes at the given expiry.
double iv2_spread(std::span<const ImpliedVolSurfacePoint> points, double expiry);

/// CSV `expiry,strike,price,std_err,iv,iv2,flag`.
void write_iv_surface_csv(std::ostream& out, std::span<const ImpliedVolSurfacePoint> points,
                          const std::string& preamble = {});

}  // namespace qvlab
