#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvlab/engine.hpp"
#include "qvlab/paths.hpp"
#include "qvlab/surfaces.hpp"

namespace qvlab {

/// Covariance of centered log returns referenced at z:
///   r(z; t1, t2) = (Lambda(z+t1) - Lambda(z)) (1 + (beta/alpha^2)(Lambda(z+t2) - Lambda(z))).
class CovarianceModel {
public:
    CovarianceModel(CovParams cov, CumulativeVariance lambda);

    /// Lambda = alpha t.
    static CovarianceModel constant(const CovParams& cov);

    const CovParams& cov() const noexcept { return cov_; }
    const CumulativeVariance& lambda() const noexcept { return lambda_; }

private:
    CovParams cov_;
    CumulativeVariance lambda_;
};

/// Requires 0 <= t1 <= t2 (ArgumentOrder is reported as DomainError).
double model_covariance(const CovarianceModel& model, double z, double t1, double t2);

/// Symmetric matrix [r(z; min(ti,tj), max(ti,tj))].
Eigen::MatrixXd model_covariance_matrix(const CovarianceModel& model, double z,
                                        std::span<const double> times);

enum class CovRegime { GammaAboveOne, GammaAtMostOne, ZeroBeta };

std::string to_string(CovRegime regime);

struct AsymptoticCovariance {
    double value;
    CovRegime regime;
    double error_exponent;  ///< remainder is O(T^error_exponent)
};

/// Leading-order r(z; t1 T, t2 T) for large T. Throws ParameterError for
/// beta < 0 on an unbounded domain.
AsymptoticCovariance asymptotic_covariance(const CovParams& cov, double z, double t1, double t2,
                                           double T, double gamma);

enum class AutocorrKind { Returns, SquaredReturns };

std::string to_string(AutocorrKind kind);

/// Large-T autocorrelation of returns (or squared returns) of length sT
/// starting at tT and (t+u)T. Requires t > 1 and u >= s > 0.
double autocorr_asymptotic(const CovParams& cov, AutocorrKind kind, double s, double t, double u,
                           double T, double gamma);

/// The same correlation computed exactly from the model covariance under the
/// Gaussian law of the centered returns (squared returns correlate as rho^2).
double autocorr_exact(const CovarianceModel& model, AutocorrKind kind, double z, double s, double t,
                      double u, double T);

struct AutocorrReport {
    AutocorrKind kind;
    double s, t, u, T;
    double value;
    double std_err;     ///< delete-one jackknife
    double asymptotic;  ///< model prediction supplied by the caller
    std::size_t n_paths;
};

/// Product-moment correlation across paths of R1 = Xbar(z+(t+s)T) - Xbar(z+tT)
/// and R2 = Xbar(z+(t+u+s)T) - Xbar(z+(t+u)T), or of their squares.
AutocorrReport empirical_autocorr(const PathEnsemble& ensemble, AutocorrKind kind, double z,
                                  double s, double t, double u, double T,
                                  double asymptotic = 0.0);

/// Sample covariance of Xbar(z + t_i) - Xbar(z) across paths.
struct EmpiricalCovariance {
    double z = 0.0;
    std::vector<double> times;
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd std_err_matrix;  ///< delete-one jackknife
    /// Jackknife covariance of the upper-triangle entries, ordered (0,0),
    /// (0,1), ..., (0,m-1), (1,1), ... .
    Eigen::MatrixXd entry_covariance;
    std::size_t n_paths = 0;

    /// Entry for times a <= b (both members of `times`).
    double value(double a, double b) const;
    std::size_t index_of(double t) const;
};

EmpiricalCovariance empirical_covariance(const PathEnsemble& ensemble, double z,
                                         std::span<const double> times);

/// Any covariance r(a, b) with a <= b.
using CovarianceFn = std::function<double(double, double)>;

CovarianceFn covariance_fn(const CovarianceModel& model, double z);
CovarianceFn covariance_fn(const EmpiricalCovariance& emp);

/// q = y(t1,t2) y(t2,t3) - y(t1,t3), y(a,b) = r(a,b)/r(a,a). Zero exactly for
/// wide-sense Markov covariances. Requires 0 < t1 <= t2 <= t3.
double wsm_residual(const CovarianceFn& r, double t1, double t2, double t3);

struct CovFit {
    CovParams params;
    double alpha_std_err = 0.0;
    double beta_std_err = 0.0;
    double beta_raw = 0.0;  ///< least-squares beta before clamping
    bool beta_clamped = false;
    double residual_rms = 0.0;
    std::size_t n_entries = 0;
};

/// Least squares of the entries (t1 <= t2, t1 > 0) against alpha t1 + beta t1 t2.
/// Negative beta is clamped to 0 (and alpha refit) unless `domain_end` admits
/// it. Standard errors propagate the jackknife entry covariance.
CovFit fit_cov_params(const EmpiricalCovariance& emp,
                      std::optional<double> domain_end = std::nullopt);

/// CSV `t_i,t_j,value,std_err` over the upper triangle.
void write_covariance_csv(std::ostream& out, const EmpiricalCovariance& emp,
                          const std::string& preamble = {});

}  // namespace qvlab
