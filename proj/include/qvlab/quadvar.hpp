#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qvlab/paths.hpp"

namespace qvlab {

/// Realized quadratic variation of log price over one window.
struct QVReport {
    double window_start;
    double T;
    double qv;        ///< sum of squared log increments
    double time_avg;  ///< qv / T
};

/// (alpha, theta, gamma, T0) of the bound |QV/T - alpha| <= theta / T^gamma, T >= T0.
struct QVParams {
    double alpha;
    double theta;
    double gamma;
    double T0;

    void validate() const;
};

/// Sum of (Delta log S)^2 over grid increments inside [t, t+T]. Both window
/// ends must be nodes of the (possibly non-uniform) path grid.
QVReport realized_qv(const PricePath& path, double t, double T);

/// Same on member i of a price ensemble.
QVReport realized_qv(const PathEnsemble& ensemble, std::size_t i, double t, double T);

/// Discretization diagnostic: QV on the full grid minus QV on every other
/// node. Window length in nodes must be even.
double qv_refinement_gap(const PricePath& path, double t, double T);

enum class BoundStatus { Pass, Fail, SkippedBelowOnset };

struct BoundCheck {
    QVReport report;
    BoundStatus status;
    double deviation;  ///< |time_avg - alpha|
    double bound;      ///< theta / T^gamma
};

std::vector<BoundCheck> check_bound(std::span<const QVReport> reports, const QVParams& params);

struct QVFit {
    double alpha_hat;
    double theta_hat;              ///< 0 when gamma is unavailable
    std::optional<double> gamma_hat;  ///< nullopt when every deviation underflows
    double residual_rms;           ///< RMS of the log-log regression residuals
    std::size_t windows_used;      ///< windows entering the regression
};

/// Fits (alpha, theta, gamma) from windows of several lengths.
///
/// alpha starts from the T-weighted mean of time_avg over the largest-T
/// quartile; (theta, gamma) come from least squares of
/// log|time_avg - alpha| on log T. alpha is then refined within the spread of
/// that quartile by minimising the regression residual, which makes the fit
/// exact on noiseless alpha + theta / T^gamma data.
/// Throws InsufficientDataError for fewer than 4 windows, fewer than 4 distinct
/// lengths, or lengths spanning less than a decade.
QVFit fit_qv_params(std::span<const QVReport> reports);

/// CSV with header `t,price`; strictly increasing t and positive prices.
/// Errors carry the offending line number.
PricePath ingest_price_csv(std::istream& in);

/// CSV `window_start,T,qv,time_avg`.
void write_qv_reports_csv(std::ostream& out, std::span<const QVReport> reports,
                          const std::string& preamble = {});

}  // namespace qvlab
