#include "qvlab/covmodel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qvlab/error.hpp"

namespace qvlab {

CovarianceModel::CovarianceModel(CovParams cov, CumulativeVariance lambda)
    : cov_(cov), lambda_(std::move(lambda)) {
    validate_cov_params(cov_, lambda_);
}

CovarianceModel CovarianceModel::constant(const CovParams& cov) {
    if (!(cov.alpha > 0.0)) throw ParameterError("cov alpha must be > 0");
    return {cov, CumulativeVariance::analytic(VolSurface::constant(cov.alpha))};
}

double model_covariance(const CovarianceModel& model, double z, double t1, double t2) {
    if (!(z >= 0.0)) throw DomainError("reference time z must be >= 0");
    if (!(t1 >= 0.0)) throw DomainError("covariance offsets must be >= 0");
    if (t1 > t2) throw DomainError("covariance arguments out of order: need t1 <= t2");
    const auto& L = model.lambda();
    const auto& c = model.cov();
    const double base = L(z);
    const double a1 = L(z + t1) - base;
    const double a2 = L(z + t2) - base;
    return a1 * (1.0 + c.beta / (c.alpha * c.alpha) * a2);
}

Eigen::MatrixXd model_covariance_matrix(const CovarianceModel& model, double z,
                                        std::span<const double> times) {
    const auto m = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd out(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
            const double a = std::min(times[i], times[j]);
            const double b = std::max(times[i], times[j]);
            out(i, j) = out(j, i) = model_covariance(model, z, a, b);
        }
    return out;
}

std::string to_string(CovRegime regime) {
    switch (regime) {
        case CovRegime::GammaAboveOne: return "gamma_gt_1";
        case CovRegime::GammaAtMostOne: return "gamma_le_1";
        case CovRegime::ZeroBeta: return "beta_zero";
    }
    return "unknown";
}

namespace {

void check_asymptotic_inputs(const CovParams& cov, double T, double gamma) {
    if (!(cov.alpha > 0.0)) throw ParameterError("cov alpha must be > 0");
    if (cov.beta < 0.0 && !cov.domain_end)
        throw ParameterError("beta < 0 is inadmissible on an unbounded domain");
    if (!(T > 0.0)) throw DomainError("time scale T must be > 0");
    if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
}

}  // namespace

AsymptoticCovariance asymptotic_covariance(const CovParams& cov, double z, double t1, double t2,
                                           double T, double gamma) {
    check_asymptotic_inputs(cov, T, gamma);
    if (!(z >= 0.0)) throw DomainError("reference time z must be >= 0");
    if (!(t1 > 0.0)) throw DomainError("asymptotic covariance needs t1 > 0");
    if (t1 > t2) throw DomainError("covariance arguments out of order: need t1 <= t2");
    if (cov.beta == 0.0) return {cov.alpha * t1 * T, CovRegime::ZeroBeta, 1.0 - gamma};
    if (gamma > 1.0)
        return {t1 * T * (cov.alpha + cov.beta * t2 * T), CovRegime::GammaAboveOne, 2.0 - gamma};
    return {cov.beta * t1 * t2 * T * T, CovRegime::GammaAtMostOne, 2.0 - gamma};
}

std::string to_string(AutocorrKind kind) {
    return kind == AutocorrKind::Returns ? "returns" : "squared_returns";
}

namespace {

void check_autocorr_ranges(double s, double t, double u) {
    if (!(t > 1.0)) throw DomainError("autocorrelation needs t > 1");
    if (!(s > 0.0)) throw DomainError("autocorrelation needs s > 0");
    if (!(u >= s)) throw DomainError("autocorrelation needs u >= s");
}

}  // namespace

double autocorr_asymptotic(const CovParams& cov, AutocorrKind kind, double s, double t, double u,
                           double T, double gamma) {
    check_asymptotic_inputs(cov, T, gamma);
    check_autocorr_ranges(s, t, u);
    if (cov.beta == 0.0) return 0.0;
    if (gamma <= 1.0) return 1.0;
    const double k = kind == AutocorrKind::Returns ? 1.0 : 2.0;
    return 1.0 - k * cov.alpha / (cov.beta * s * T);
}

double autocorr_exact(const CovarianceModel& model, AutocorrKind kind, double z, double s, double t,
                      double u, double T) {
    check_autocorr_ranges(s, t, u);
    if (!(T > 0.0)) throw DomainError("time scale T must be > 0");
    const auto C = [&](double a, double b) {
        return model_covariance(model, z, std::min(a, b), std::max(a, b));
    };
    const auto inc_cov = [&](double a1, double b1, double a2, double b2) {
        return C(b1, b2) - C(b1, a2) - C(a1, b2) + C(a1, a2);
    };
    const double a1 = t * T, b1 = (t + s) * T;
    const double a2 = (t + u) * T, b2 = (t + u + s) * T;
    const double rho = inc_cov(a1, b1, a2, b2) /
                       std::sqrt(inc_cov(a1, b1, a1, b1) * inc_cov(a2, b2, a2, b2));
    return kind == AutocorrKind::Returns ? rho : rho * rho;
}

namespace {

void require_centered(const PathEnsemble& e) {
    if (e.kind() != PathKind::CenteredLogReturn)
        throw MisuseError("covariance estimation needs a centered_log_return ensemble");
}

}  // namespace

AutocorrReport empirical_autocorr(const PathEnsemble& ensemble, AutocorrKind kind, double z,
                                  double s, double t, double u, double T, double asymptotic) {
    require_centered(ensemble);
    check_autocorr_ranges(s, t, u);
    const auto& g = ensemble.grid();
    const std::size_t k1 = g.require_node(z + t * T, "first return start");
    const std::size_t k2 = g.require_node(z + (t + s) * T, "first return end");
    const std::size_t k3 = g.require_node(z + (t + u) * T, "second return start");
    const std::size_t k4 = g.require_node(z + (t + u + s) * T, "second return end");
    const std::size_t n = ensemble.n_paths();
    if (n < 3) throw InsufficientDataError("autocorrelation needs at least 3 paths");

    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = ensemble.path(i);
        a[i] = p[k2] - p[k1];
        b[i] = p[k4] - p[k3];
        if (kind == AutocorrKind::SquaredReturns) {
            a[i] *= a[i];
            b[i] *= b[i];
        }
    }
    // Center first so the delete-one updates below stay well conditioned.
    const double nn = static_cast<double>(n);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= nn;
    mb /= nn;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a[i] -= ma;
        b[i] -= mb;
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
        sab += a[i] * b[i];
    }
    const double rho = sab / std::sqrt(saa * sbb);

    // Delete-one jackknife: removing x_k from centered data shifts the mean by
    // -x_k / (n-1), so the centered sums drop by x_k y_k n / (n-1).
    const double f = nn / (nn - 1.0);
    std::vector<double> reps(n);
    double mean_rep = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double caa = saa - f * a[k] * a[k];
        const double cbb = sbb - f * b[k] * b[k];
        const double cab = sab - f * a[k] * b[k];
        reps[k] = cab / std::sqrt(caa * cbb);
        mean_rep += reps[k];
    }
    mean_rep /= nn;
    double ss = 0.0;
    for (double r : reps) ss += (r - mean_rep) * (r - mean_rep);
    const double se = std::sqrt((nn - 1.0) / nn * ss);
    return {kind, s, t, u, T, rho, se, asymptotic, n};
}

std::size_t EmpiricalCovariance::index_of(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
    throw RangeError("time " + format_g17(t) + " is not in the empirical covariance grid");
}

double EmpiricalCovariance::value(double a, double b) const {
    return matrix(static_cast<Eigen::Index>(index_of(a)), static_cast<Eigen::Index>(index_of(b)));
}

EmpiricalCovariance empirical_covariance(const PathEnsemble& ensemble, double z,
                                         std::span<const double> times) {
    require_centered(ensemble);
    if (times.empty()) throw DomainError("need at least one time offset");
    const std::size_t n = ensemble.n_paths();
    if (n < 30) throw InsufficientDataError("empirical covariance needs at least 30 paths");
    const auto& g = ensemble.grid();
    const std::size_t kz = g.require_node(z, "reference time z");
    const std::size_t m = times.size();
    std::vector<std::size_t> nodes(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (!(times[j] >= 0.0)) throw DomainError("time offsets must be >= 0");
        nodes[j] = g.require_node(z + times[j], "covariance time");
    }

    // Centered increments, one row per path.
    const auto mm = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), mm);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = ensemble.path(i);
        for (std::size_t j = 0; j < m; ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p[nodes[j]] - p[kz];
    }
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;

    const double nn = static_cast<double>(n);
    EmpiricalCovariance out;
    out.z = z;
    out.times.assign(times.begin(), times.end());
    out.n_paths = n;
    const Eigen::MatrixXd S = X.transpose() * X;
    out.matrix = S / (nn - 1.0);

    // Delete-one replicate of entry (a,b) is (S_ab - p_k n/(n-1)) / (n-2) with
    // p_k = x_ka x_kb, so the jackknife covariance is a scaled covariance of
    // the per-path products.
    const Eigen::Index E = mm * (mm + 1) / 2;
    Eigen::MatrixXd P(static_cast<Eigen::Index>(n), E);
    Eigen::Index e = 0;
    for (Eigen::Index a = 0; a < mm; ++a)
        for (Eigen::Index b = a; b < mm; ++b, ++e) P.col(e) = X.col(a).cwiseProduct(X.col(b));
    const Eigen::RowVectorXd pmean = P.colwise().mean();
    P.rowwise() -= pmean;
    const double scale = nn / ((nn - 1.0) * (nn - 2.0));
    out.entry_covariance = (nn - 1.0) / nn * scale * scale * (P.transpose() * P);

    out.std_err_matrix = Eigen::MatrixXd::Zero(mm, mm);
    e = 0;
    for (Eigen::Index a = 0; a < mm; ++a)
        for (Eigen::Index b = a; b < mm; ++b, ++e)
            out.std_err_matrix(a, b) = out.std_err_matrix(b, a) = std::sqrt(out.entry_covariance(e, e));
    return out;
}

CovarianceFn covariance_fn(const CovarianceModel& model, double z) {
    return [model, z](double a, double b) { return model_covariance(model, z, a, b); };
}

CovarianceFn covariance_fn(const EmpiricalCovariance& emp) {
    return [emp](double a, double b) { return emp.value(a, b); };
}

double wsm_residual(const CovarianceFn& r, double t1, double t2, double t3) {
    if (!(t1 > 0.0) || t1 > t2 || t2 > t3)
        throw DomainError("wsm residual needs 0 < t1 <= t2 <= t3");
    const double r11 = r(t1, t1);
    const double r22 = r(t2, t2);
    if (!(r11 > 0.0)) throw SingularError("r(t1, t1) = 0; y(t1, .) is undefined");
    if (!(r22 > 0.0)) throw SingularError("r(t2, t2) = 0; y(t2, .) is undefined");
    const double y12 = r(t1, t2) / r11;
    const double y23 = r(t2, t3) / r22;
    const double y13 = r(t1, t3) / r11;
    return y12 * y23 - y13;
}

CovFit fit_cov_params(const EmpiricalCovariance& emp, std::optional<double> domain_end) {
    std::vector<double> distinct;
    for (double t : emp.times)
        if (std::none_of(distinct.begin(), distinct.end(),
                         [t](double d) { return std::abs(d - t) <= 1e-12 * std::max(1.0, t); }))
            distinct.push_back(t);
    if (distinct.size() < 3) throw InsufficientDataError("covariance fit needs at least 3 distinct times");

    const auto m = static_cast<Eigen::Index>(emp.times.size());
    const Eigen::Index E = m * (m + 1) / 2;
    std::vector<Eigen::Index> rows;  // entry indices used
    std::vector<double> t1s, t2s;
    Eigen::Index e = 0;
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = a; b < m; ++b, ++e) {
            const double t1 = std::min(emp.times[a], emp.times[b]);
            const double t2 = std::max(emp.times[a], emp.times[b]);
            if (!(t1 > 0.0)) continue;
            rows.push_back(e);
            t1s.push_back(t1);
            t2s.push_back(t2);
        }
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd D(k, 2);
    Eigen::VectorXd y(k);
    Eigen::MatrixXd select = Eigen::MatrixXd::Zero(k, E);
    e = 0;
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = a; b < m; ++b, ++e) {
            const auto it = std::find(rows.begin(), rows.end(), e);
            if (it == rows.end()) continue;
            const auto r = static_cast<Eigen::Index>(it - rows.begin());
            D(r, 0) = t1s[r];
            D(r, 1) = t1s[r] * t2s[r];
            y(r) = emp.matrix(a, b);
            select(r, e) = 1.0;
        }

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    if (qr.rank() < 2) throw InsufficientDataError("covariance fit design is singular");
    const Eigen::Matrix2d DtD = D.transpose() * D;
    const Eigen::MatrixXd Wc = DtD.inverse() * D.transpose();
    // Linear map from the full entry vector to (alpha, beta).
    const Eigen::MatrixXd W = Wc * select;
    Eigen::Vector2d theta = Wc * y;

    CovFit fit;
    fit.beta_raw = theta(1);
    fit.n_entries = static_cast<std::size_t>(k);
    fit.params.domain_end = domain_end;
    Eigen::MatrixXd param_cov;
    bool clamp = theta(1) < 0.0 && !domain_end;
    if (clamp) {
        const Eigen::VectorXd d0 = D.col(0);
        const double denom = d0.squaredNorm();
        theta(0) = d0.dot(y) / denom;
        theta(1) = 0.0;
        const Eigen::RowVectorXd w0 = (d0.transpose() / denom) * select;
        param_cov = Eigen::MatrixXd::Zero(2, 2);
        param_cov(0, 0) = (w0 * emp.entry_covariance * w0.transpose())(0, 0);
    } else if (emp.entry_covariance.rows() == E) {
        param_cov = W * emp.entry_covariance * W.transpose();
    }
    fit.beta_clamped = clamp;
    fit.params.alpha = theta(0);
    fit.params.beta = theta(1);
    if (param_cov.size() == 4) {
        fit.alpha_std_err = std::sqrt(std::max(0.0, param_cov(0, 0)));
        fit.beta_std_err = std::sqrt(std::max(0.0, param_cov(1, 1)));
    }
    if (clamp && emp.entry_covariance.rows() == E)
        fit.beta_std_err = std::sqrt(std::max(0.0, (W * emp.entry_covariance * W.transpose())(1, 1)));
    const Eigen::VectorXd resid = y - D * theta;
    fit.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(k));
    return fit;
}

void write_covariance_csv(std::ostream& out, const EmpiricalCovariance& emp,
                          const std::string& preamble) {
    out << preamble << "t_i,t_j,value,std_err\n";
    const auto m = static_cast<Eigen::Index>(emp.times.size());
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = a; b < m; ++b)
            out << format_g17(emp.times[a]) << ',' << format_g17(emp.times[b]) << ','
                << format_g17(emp.matrix(a, b)) << ',' << format_g17(emp.std_err_matrix(a, b)) << '\n';
}

}  // namespace qvlab
