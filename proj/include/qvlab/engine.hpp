#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qvlab/paths.hpp"
#include "qvlab/surfaces.hpp"

namespace qvlab {

/// (alpha, beta) of the wide-sense-Markov covariance model, with an optional
/// finite domain end R that admits negative beta.
struct CovParams {
    double alpha = 0.04;
    double beta = 0.0;
    std::optional<double> domain_end;
};

/// Throws ParameterError unless alpha > 0 and beta is admissible: beta >= 0 on
/// an unbounded domain, beta > -alpha^2 / Lambda(R) on [0, R].
void validate_cov_params(const CovParams& cov, const CumulativeVariance& lambda);

/// g(t) = 1 + (beta / alpha^2) Lambda(t).
class GrowthFunction {
public:
    GrowthFunction(CovParams cov, CumulativeVariance lambda);

    const CovParams& cov() const noexcept { return cov_; }
    const CumulativeVariance& lambda() const noexcept { return lambda_; }

    double g(double t) const;
    /// g'(t) / g(t) = (beta / alpha^2) Lambda'(t) / g(t).
    double log_derivative(double t) const;
    /// Integrated clock int_0^t sigma^2 / g^2 dw = Lambda(t) / g(t).
    double clock(double t) const;

private:
    CovParams cov_;
    CumulativeVariance lambda_;
};

/// Deterministic mean log return lambda0(t) = int_0^t m(w) dw, given as the
/// rate m and its integral. Defaults to m = 0.
struct MeanLogReturn {
    std::function<double(double)> rate;
    std::function<double(double)> cumulative;

    static MeanLogReturn zero();
    static MeanLogReturn constant_rate(double m);
};

enum class DriftForm { ConstantMu, RiskNeutral, GrowthImplied };

/// Drift mu(s, t) of dS/S. RiskNeutral uses the risk-free rate only.
class DriftSpec {
public:
    static DriftSpec constant_mu(double mu);
    static DriftSpec risk_neutral(double r);
    static DriftSpec growth_implied(std::shared_ptr<const GrowthFunction> growth,
                                    MeanLogReturn lambda0, double s0);

    DriftForm form() const noexcept { return form_; }
    Measure measure() const noexcept {
        return form_ == DriftForm::RiskNeutral ? Measure::RiskNeutral : Measure::Physical;
    }
    /// The constant rate (mu or r); meaningless for GrowthImplied.
    double rate() const noexcept { return rate_; }

    /// mu(s, t) given the local variance sigma2 = sigma^2(s, t).
    double mu(double s, double t, double sigma2) const;

private:
    DriftForm form_ = DriftForm::ConstantMu;
    double rate_ = 0.0;
    std::shared_ptr<const GrowthFunction> growth_;
    MeanLogReturn lambda0_;
    double s0_ = 1.0;
};

/// Injected standard-normal draw for (path, step); unit-test hook.
using NoiseSource = std::function<double(std::size_t path, std::size_t step)>;

struct SimOptions {
    unsigned threads = 0;      ///< 0: QVLAB_THREADS or hardware default
    NoiseSource forced_noise;  ///< replaces the RNG when set
    /// simulate_price only: row i uses substream first_path + i, so batches
    /// with consecutive offsets reproduce one large run.
    std::size_t first_path = 0;
    /// simulate_price only: keep every record_stride-th node. The output grid
    /// has step dt * record_stride; n_steps must be a multiple of it.
    std::size_t record_stride = 1;
};

/// Log-space Euler-Maruyama:
///   d log S = (mu - sigma^2 / 2) dt + sigma sqrt(dt) Z.
/// Path i always uses substream (seed, i), so output is independent of threads.
PathEnsemble simulate_price(const VolSurface& surface, const DriftSpec& drift, double s0,
                            const PathGrid& grid, std::size_t n_paths, std::uint64_t seed,
                            const SimOptions& options = {});

/// Anchor used to recover prices S = s0 exp(lambda0(t) + Xbar(t)) when the
/// surface depends on price.
struct PriceAnchor {
    double s0 = 100.0;
    MeanLogReturn lambda0 = MeanLogReturn::zero();
};

struct CenteredReturns {
    PathEnsemble paths;
    CumulativeVariance lambda;  ///< Lambda used by the simulation
};

/// Centered log returns under dXbar = (g'/g) Xbar dt + sigma dB, Xbar(0) = 0.
///
/// Each step propagates the linear drift exactly through g(t_{k+1}) / g(t_k).
/// For price-independent surfaces the noise uses the exact clock increment
/// g_{k+1}^2 int sigma^2 / g^2, so the law is exact on any grid. For
/// price-dependent surfaces the noise is Euler and Lambda is built on the fly
/// from the cross-path mean of sigma^2 at each node.
CenteredReturns simulate_centered_returns_with_lambda(const CovParams& cov,
                                                      const VolSurface& surface,
                                                      const PathGrid& grid, std::size_t n_paths,
                                                      std::uint64_t seed,
                                                      const SimOptions& options = {},
                                                      const PriceAnchor& anchor = {});

PathEnsemble simulate_centered_returns(const CovParams& cov, const VolSurface& surface,
                                       const PathGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, const SimOptions& options = {},
                                       const PriceAnchor& anchor = {});

/// Samples of Xbar at absolute horizon times given Xbar(z) = x.
struct ConditionalSamples {
    double z = 0.0;
    double x = 0.0;
    std::vector<double> horizons;
    std::size_t n_samples = 0;
    std::vector<double> values;  ///< row-major (sample, horizon)
    bool exact = true;           ///< false when produced by binned conditioning

    double at(std::size_t i, std::size_t j) const { return values[i * horizons.size() + j]; }
    /// Column j as a vector.
    std::vector<double> column(std::size_t j) const;
};

struct ConditionalOptions {
    SimOptions sim;
    /// Fallback only: grid step and half-width of the conditioning bin.
    double fallback_dt = 0.01;
    double fallback_bin_half_width = 0.01;
    PriceAnchor anchor;
};

/// Exact conditional sampling through Xbar(t) = g(t) B*(Lambda(t) / g(t)):
/// B* is pinned at clock(z) to x / g(z) and extended by independent Gaussian
/// increments. Price-dependent surfaces fall back to binned conditioning of
/// simulated paths and the result is flagged inexact.
ConditionalSamples simulate_canonical_conditional(const CovParams& cov, const VolSurface& surface,
                                                  double z, double x,
                                                  std::span<const double> horizons,
                                                  std::size_t n_paths, std::uint64_t seed,
                                                  const ConditionalOptions& options = {});

/// mu(s, t) = (g'/g)(log(s/s0) - lambda0(t)) + m(t) + sigma^2(s, t) / 2.
/// `lambda` is required for price-dependent surfaces.
DriftSpec drift_from_growth(const CovParams& cov, const VolSurface& surface,
                            const MeanLogReturn& lambda0, double s0,
                            const std::optional<CumulativeVariance>& lambda = std::nullopt);

/// Deterministic path whose squared log increments equal the exact integrated
/// variance of each step (price-independent surfaces only).
PathEnsemble integrated_variance_path(const VolSurface& surface, double s0, const PathGrid& grid);

}  // namespace qvlab
