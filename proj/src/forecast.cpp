#include "qvlab/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "qvlab/error.hpp"
#include "qvlab/rng.hpp"

namespace qvlab {

std::string to_string(ForecastVariant variant) {
    return variant == ForecastVariant::Limit ? "limit" : "corrected_gamma_gt_1";
}

std::string to_string(PVMethod method) {
    return method == PVMethod::MonteCarlo ? "monte_carlo" : "closed_form_check";
}

namespace {

void check_times(std::span<const double> times) {
    if (times.empty()) throw DomainError("forecast needs at least one time");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw DomainError("forecast times must be > 0");
        if (i > 0 && times[i] < times[i - 1]) throw DomainError("forecast times must be sorted");
    }
}

}  // namespace

void require_psd(const Eigen::MatrixXd& m, const char* what) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double floor = -1e-10 * std::max(1e-300, std::abs(m.trace()));
    if (es.eigenvalues().minCoeff() < floor)
        throw RegimeError(std::string(what) + " is not positive semidefinite (min eigenvalue " +
                          format_g17(es.eigenvalues().minCoeff()) +
                          "); use exact conditional simulation instead");
}

ForecastDistribution limit_forecast(double x, double z, std::span<const double> times,
                                    double alpha) {
    if (z == 0.0) throw SingularError("conditioning at z = 0 is singular");
    if (!(z > 0.0)) throw DomainError("z must be > 0");
    if (!(alpha > 0.0)) throw ParameterError("alpha must be > 0");
    check_times(times);
    const auto n = static_cast<Eigen::Index>(times.size());
    ForecastDistribution f;
    f.times.assign(times.begin(), times.end());
    f.mean.resize(n);
    f.cov.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        f.mean(i) = (z + times[i]) / z * x;
        for (Eigen::Index j = i; j < n; ++j) f.cov(i, j) = f.cov(j, i) = times[i] * (z + times[j]) / z * alpha;
    }
    f.variant = ForecastVariant::Limit;
    f.z = z;
    f.x = x;
    f.alpha = alpha;
    return f;
}

ForecastDistribution corrected_forecast(double x, double z, std::span<const double> times,
                                        const CovParams& cov, double T, double gamma) {
    if (!(T > 0.0)) throw DomainError("T must be > 0");
    if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
    auto f = limit_forecast(x, z, times, cov.alpha);
    f.T = T;
    if (gamma <= 1.0) return f;
    if (!(cov.beta > 0.0)) throw ParameterError("corrected forecast needs beta > 0");
    const double k = cov.alpha / (cov.beta * z * z * T);
    const auto n = static_cast<Eigen::Index>(times.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        f.mean(i) -= k * times[i] * x;
        for (Eigen::Index j = i; j < n; ++j) {
            f.cov(i, j) -= cov.alpha * k * times[i] * times[j];
            f.cov(j, i) = f.cov(i, j);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(f.cov(i, i) > 0.0))
            throw RegimeError("corrected variance is not positive at T = " + format_g17(T) +
                              "; use exact conditional simulation instead");
    require_psd(f.cov, "corrected forecast covariance");
    f.variant = ForecastVariant::CorrectedGammaGT1;
    return f;
}

PriceForecast lognormal_price_forecast(double s0, double s_z, const MeanLogReturn& lambda0,
                                       const ForecastDistribution& forecast) {
    if (!(s0 > 0.0) || !(s_z > 0.0)) throw DomainError("prices must be > 0");
    if (!lambda0.cumulative) throw ConfigError("mean log return function missing");
    const double T = forecast.T;
    const double sq = std::sqrt(T);
    const double zT = forecast.z * T;
    const double x = (std::log(s_z / s0) - lambda0.cumulative(zT)) / sq;
    if (std::abs(x - forecast.x) > 1e-9 * std::max(1.0, std::abs(x)))
        throw ConfigError("forecast conditioned on x = " + format_g17(forecast.x) +
                          " but (log(s_z/s0) - lambda0(zT)) / sqrt(T) = " + format_g17(x));
    PriceForecast p;
    p.times = forecast.times;
    p.s_z = s_z;
    p.T = T;
    const auto n = static_cast<Eigen::Index>(forecast.times.size());
    p.mean_log.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        p.mean_log(i) = std::log(s0) + lambda0.cumulative((forecast.z + forecast.times[i]) * T) +
                        sq * forecast.mean(i);
    p.cov_log = T * forecast.cov;
    return p;
}

PriceForecast short_horizon_price_forecast(double s_z, double m_bar, double alpha,
                                           std::span<const double> times, double T) {
    if (!(s_z > 0.0)) throw DomainError("s_z must be > 0");
    if (!(alpha > 0.0)) throw ParameterError("alpha must be > 0");
    if (!(T > 0.0)) throw DomainError("T must be > 0");
    check_times(times);
    const auto n = static_cast<Eigen::Index>(times.size());
    PriceForecast p;
    p.times.assign(times.begin(), times.end());
    p.s_z = s_z;
    p.T = T;
    p.mean_log.resize(n);
    p.cov_log.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p.mean_log(i) = std::log(s_z) + m_bar - 0.5 * alpha * times[i] * T;
        for (Eigen::Index j = i; j < n; ++j) p.cov_log(i, j) = p.cov_log(j, i) = alpha * times[i] * T;
    }
    return p;
}

double lognormal_call_value(double mean_log, double var_log, double strike, double discount) {
    if (!(strike > 0.0)) throw DomainError("strike must be > 0");
    if (!(var_log >= 0.0)) throw DomainError("variance must be >= 0");
    if (var_log == 0.0) return discount * std::max(std::exp(mean_log) - strike, 0.0);
    const double sd = std::sqrt(var_log);
    const double d1 = (mean_log - std::log(strike) + var_log) / sd;
    const double d2 = d1 - sd;
    return discount * (std::exp(mean_log + 0.5 * var_log) * normal_cdf(d1) - strike * normal_cdf(d2));
}

PVReport portfolio_pv(const Portfolio& portfolio, const PriceForecast& forecast, double r,
                      std::size_t n_samples, std::uint64_t seed) {
    if (portfolio.positions.empty()) throw ConfigError("portfolio is empty");
    if (n_samples < 2) throw DomainError("portfolio_pv needs at least 2 samples");
    const auto n = static_cast<Eigen::Index>(forecast.times.size());

    struct Leg {
        double weight;  // quantity times discount
        Eigen::Index idx;
        bool share;
        OptionKind kind;
        double strike;
    };
    std::vector<Leg> legs;
    for (const auto& pos : portfolio.positions) {
        if (pos.instrument == InstrumentKind::EuropeanOption) {
            pos.option.validate();
            if (pos.option.kind != OptionKind::Call && pos.option.kind != OptionKind::Put &&
                pos.option.kind != OptionKind::Forward)
                throw ConfigError("portfolio options must be call, put or forward");
        }
        const double tau = pos.payoff_time();
        Eigen::Index idx = -1;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(forecast.times[i] - tau) <= 1e-9 * std::max(1.0, tau)) idx = i;
        if (idx < 0) throw ConfigError("payoff time " + format_g17(tau) + " is not a forecast time");
        legs.push_back({pos.quantity * std::exp(-r * tau * forecast.T), idx,
                        pos.instrument == InstrumentKind::UnderlyingShare, pos.option.kind,
                        pos.option.strike});
    }

    require_psd(forecast.cov_log, "forecast covariance");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(forecast.cov_log);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd A = es.eigenvectors() * ev.asDiagonal();

    const std::uint64_t stream_seed = derive_seed(seed, "portfolio_pv");
    std::vector<double> pv(n_samples);
    Eigen::VectorXd zv(n), logs(n);
    for (std::size_t s = 0; s < n_samples; ++s) {
        NormalStream rng(stream_seed, s);
        for (Eigen::Index i = 0; i < n; ++i) zv(i) = rng.next();
        logs.noalias() = forecast.mean_log + A * zv;
        double total = 0.0;
        for (const auto& leg : legs) {
            const double S = std::exp(logs(leg.idx));
            const double payoff = leg.share ? S : option_payoff(leg.kind, leg.strike, S);
            total += leg.weight * payoff;
        }
        pv[s] = total;
    }
    double mean = 0.0;
    for (double v : pv) mean += v;
    mean /= static_cast<double>(n_samples);
    double ss = 0.0;
    for (double v : pv) ss += (v - mean) * (v - mean);

    PVReport rep;
    rep.mean_pv = mean;
    rep.var_pv = ss / static_cast<double>(n_samples - 1);
    rep.std_err = std::sqrt(rep.var_pv / static_cast<double>(n_samples));
    rep.n_samples = n_samples;
    rep.method = PVMethod::MonteCarlo;

    if (legs.size() == 1 && !legs[0].share && legs[0].kind == OptionKind::Call) {
        const auto& leg = legs[0];
        rep.closed_form = lognormal_call_value(forecast.mean_log(leg.idx), forecast.cov_log(leg.idx, leg.idx),
                                               leg.strike, leg.weight);
        rep.closed_form_pass = std::abs(rep.mean_pv - *rep.closed_form) <= 3.0 * rep.std_err;
        rep.method = PVMethod::ClosedFormCheck;
    }
    return rep;
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& f, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(f, &used);
    } catch (const std::exception&) {
        throw ParseError("malformed number '" + f + "'", line);
    }
    if (used != f.size() || !std::isfinite(v)) throw ParseError("malformed number '" + f + "'", line);
    return v;
}

}  // namespace

Portfolio read_portfolio_csv(std::istream& in) {
    Portfolio p;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header) {
            if (t != "quantity,kind,strike,expiry")
                throw ParseError("expected header 'quantity,kind,strike,expiry'", line_no);
            header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(t);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(trim(f));
        if (fields.size() != 4) throw ParseError("expected 4 fields", line_no);
        Position pos;
        pos.quantity = parse_number(fields[0], line_no);
        const double strike = parse_number(fields[2], line_no);
        const double expiry = parse_number(fields[3], line_no);
        if (!(expiry > 0.0)) throw ParseError("expiry must be > 0", line_no);
        if (fields[1] == "share") {
            pos.instrument = InstrumentKind::UnderlyingShare;
            pos.pay_time = expiry;
        } else {
            OptionKind kind;
            try {
                kind = option_kind_from_string(fields[1]);
            } catch (const Error&) {
                throw ParseError("unknown instrument kind '" + fields[1] + "'", line_no);
            }
            if (kind != OptionKind::Call && kind != OptionKind::Put && kind != OptionKind::Forward)
                throw ParseError("portfolio kind must be share, call, put or forward", line_no);
            pos.instrument = InstrumentKind::EuropeanOption;
            pos.option = {kind, strike, expiry};
            try {
                pos.option.validate();
            } catch (const Error& e) {
                throw ParseError(e.what(), line_no);
            }
        }
        p.positions.push_back(pos);
    }
    if (!header) throw ParseError("missing header 'quantity,kind,strike,expiry'", line_no);
    if (p.positions.empty()) throw ParseError("portfolio has no positions", line_no);
    return p;
}

double ks_statistic_normal(std::vector<double> v) {
    if (v.empty()) throw InsufficientDataError("KS statistic needs samples");
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double F = normal_cdf(v[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

CltAudit clt_audit(const ConditionalSamples& samples, const ForecastDistribution& forecast) {
    const std::size_t N = forecast.times.size();
    if (samples.horizons.size() != N) throw ConfigError("samples and forecast have different time sets");
    const double T = forecast.T;
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    if (!close(samples.z, forecast.z * T)) throw ConfigError("samples and forecast have different z");
    if (!close(samples.x, forecast.x * std::sqrt(T))) throw ConfigError("samples and forecast have different x");
    for (std::size_t j = 0; j < N; ++j)
        if (!close(samples.horizons[j], (forecast.z + forecast.times[j]) * T))
            throw ConfigError("samples and forecast have different time sets");
    const std::size_t n = samples.n_samples;
    if (n < 30) throw InsufficientDataError("CLT audit needs at least 30 samples");

    const auto NN = static_cast<Eigen::Index>(N);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), NN);
    const double inv = 1.0 / std::sqrt(T);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < N; ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples.at(i, j) * inv;

    CltAudit a;
    const double nn = static_cast<double>(n);
    a.ks_critical = 1.628 / std::sqrt(nn);
    a.ks_pass = true;
    for (Eigen::Index j = 0; j < NN; ++j) {
        std::vector<double> col(n);
        const double sd = std::sqrt(forecast.cov(j, j));
        for (std::size_t i = 0; i < n; ++i)
            col[i] = (X(static_cast<Eigen::Index>(i), j) - forecast.mean(j)) / sd;
        a.ks.push_back(ks_statistic_normal(std::move(col)));
        a.ks_pass = a.ks_pass && a.ks.back() < a.ks_critical;
    }

    a.sample_mean = X.colwise().mean().transpose();
    Eigen::MatrixXd C = X.rowwise() - a.sample_mean.transpose();
    a.sample_cov = C.transpose() * C / (nn - 1.0);
    a.mean_std_err = (a.sample_cov.diagonal() / nn).cwiseSqrt();
    a.cov_std_err.resize(NN, NN);
    for (Eigen::Index i = 0; i < NN; ++i)
        for (Eigen::Index j = i; j < NN; ++j) {
            const Eigen::ArrayXd p = C.col(i).array() * C.col(j).array();
            const double m = p.mean();
            const double var = (p - m).square().sum() / (nn - 1.0);
            a.cov_std_err(i, j) = a.cov_std_err(j, i) = std::sqrt(var / nn);
        }
    for (Eigen::Index i = 0; i < NN; ++i) {
        a.worst_mean_z = std::max(a.worst_mean_z, std::abs(a.sample_mean(i) - forecast.mean(i)) / a.mean_std_err(i));
        for (Eigen::Index j = i; j < NN; ++j)
            a.worst_cov_z = std::max(a.worst_cov_z,
                                     std::abs(a.sample_cov(i, j) - forecast.cov(i, j)) / a.cov_std_err(i, j));
    }
    a.moments_pass = a.worst_mean_z <= 3.0 && a.worst_cov_z <= 3.0;
    a.pass = a.ks_pass && a.moments_pass;
    return a;
}

}  // namespace qvlab
