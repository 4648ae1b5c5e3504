#pragma once

#include <memory>
#include <string>
#include <vector>

namespace qvlab {

class PathEnsemble;

enum class SurfaceFamily { Constant, Seasonal, DecayingSmile };

std::string to_string(SurfaceFamily family);
SurfaceFamily surface_family_from_string(const std::string& s);

/// Raw parameters of a local-variance family. Unused fields are ignored by
/// the simpler families.
struct SurfaceParams {
    SurfaceFamily family = SurfaceFamily::Constant;
    double alpha = 0.04;   ///< long-run variance rate
    double a = 0.0;        ///< seasonal amplitude, |a| < 1
    double omega = 1.0;    ///< seasonal angular frequency
    double b = 0.0;        ///< smile amplitude, 0 <= b < 1
    double tau = 1.0;      ///< smile decay time
    double s_ref = 100.0;  ///< smile reference price
};

/// Analytic bounds on the time-average local variance over [V, V+T].
struct TimeAverageEnvelope {
    double lower;
    double upper;
    double V;
    double T;
};

/// Local variance sigma^2(s, t) with certified bound M and price-Lipschitz
/// constant K. Families:
///
///   Constant       alpha
///   Seasonal       alpha (1 + a sin(omega t))
///   DecayingSmile  alpha (1 + a sin(omega t)) (1 + b e^{-t/tau} psi(s)),
///                  psi(s) = (s - s_ref) / (1 + |s - s_ref|)
///
/// Immutable; all members are safe to call concurrently.
class VolSurface {
public:
    /// Validates ranges and certifies M, K and the envelope coefficient theta.
    /// Throws ParameterError naming the violated constraint.
    static VolSurface make(const SurfaceParams& params);

    static VolSurface constant(double alpha);
    static VolSurface seasonal(double alpha, double a, double omega);
    static VolSurface decaying_smile(double alpha, double a, double omega, double b, double tau,
                                     double s_ref);

    const SurfaceParams& params() const noexcept { return p_; }
    SurfaceFamily family() const noexcept { return p_.family; }
    double alpha() const noexcept { return p_.alpha; }

    /// Checked evaluation; DomainError for s <= 0 or t < 0.
    double sigma2(double s, double t) const;
    /// Hot-loop evaluation without domain checks.
    double sigma2_unchecked(double s, double t) const noexcept;

    bool price_dependent() const noexcept { return p_.family == SurfaceFamily::DecayingSmile && p_.b > 0.0; }

    /// Price-free factor alpha (1 + a sin(omega t)); equals sigma^2 for
    /// price-independent surfaces.
    double time_factor(double t) const noexcept;

    /// Exact integral of the time factor over [t0, t1].
    double integrated_time_factor(double t0, double t1) const noexcept;

    double bound_M() const noexcept { return M_; }
    double lipschitz_K() const noexcept { return K_; }
    /// Coefficient theta with |envelope - alpha| <= theta / T for all V, T > 0.
    double envelope_theta() const noexcept { return theta_; }

    /// inf / sup of psi over s > 0.
    double psi_min() const noexcept;
    double psi_max() const noexcept { return 1.0; }

private:
    explicit VolSurface(const SurfaceParams& p);

    SurfaceParams p_;
    double M_ = 0.0;
    double K_ = 0.0;
    double theta_ = 0.0;
};

double eval_sigma2(const VolSurface& surface, double s, double t);

TimeAverageEnvelope time_average_envelope(const VolSurface& surface, double V, double T);

/// Cumulative expected variance Lambda(t) = E int_0^t sigma^2(S(w), w) dw.
///
/// Either analytic (price-independent surfaces) or tabulated on a uniform
/// grid from a Monte Carlo ensemble, linearly interpolated between nodes.
class CumulativeVariance {
public:
    static CumulativeVariance analytic(const VolSurface& surface);
    /// Node k holds Lambda(t_start + k dt); values[0] must be Lambda(t_start).
    static CumulativeVariance tabulated(double t_start, double dt, std::vector<double> values,
                                        std::vector<double> std_err);

    double operator()(double t) const;
    /// d Lambda / dt (segment slope when tabulated).
    double rate(double t) const;
    /// Monte Carlo standard error of Lambda(t); 0 when analytic.
    double std_err(double t) const;

    bool is_analytic() const noexcept { return surface_ != nullptr; }
    /// Largest t covered; +inf when analytic.
    double t_max() const noexcept;

private:
    std::shared_ptr<const VolSurface> surface_;
    double t_start_ = 0.0;
    double dt_ = 0.0;
    std::vector<double> values_;
    std::vector<double> std_err_;
};

struct LambdaEstimate {
    double value;
    double std_err;
};

/// Lambda(t). Price-dependent surfaces need `ensemble` (Price paths starting at
/// t = 0 under the physical measure); otherwise ConfigError.
LambdaEstimate capital_lambda(const VolSurface& surface, double t,
                              const PathEnsemble* ensemble = nullptr);

/// Whole Lambda function; same context rules as capital_lambda.
CumulativeVariance make_cumulative_variance(const VolSurface& surface,
                                            const PathEnsemble* ensemble = nullptr);

}  // namespace qvlab
