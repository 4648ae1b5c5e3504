#include "qvlab/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>

#include "qvlab/error.hpp"

namespace qvlab {

std::string to_string(OptionKind kind) {
    switch (kind) {
        case OptionKind::Call: return "call";
        case OptionKind::Put: return "put";
        case OptionKind::Forward: return "forward";
        case OptionKind::VarianceCall: return "variance_call";
        case OptionKind::VariancePut: return "variance_put";
    }
    return "unknown";
}

OptionKind option_kind_from_string(const std::string& s) {
    if (s == "call") return OptionKind::Call;
    if (s == "put") return OptionKind::Put;
    if (s == "forward") return OptionKind::Forward;
    if (s == "variance_call") return OptionKind::VarianceCall;
    if (s == "variance_put") return OptionKind::VariancePut;
    throw ConfigError("unknown option kind '" + s + "'");
}

namespace {

bool is_variance(OptionKind k) { return k == OptionKind::VarianceCall || k == OptionKind::VariancePut; }

}  // namespace

void OptionSpec::validate() const {
    if (!(expiry > 0.0)) throw DomainError("option expiry must be > 0");
    if (is_variance(kind)) {
        if (!(strike >= 0.0)) throw DomainError("variance strike must be >= 0");
    } else if (kind == OptionKind::Forward) {
        if (!(strike >= 0.0)) throw DomainError("forward strike must be >= 0");
    } else if (!(strike > 0.0)) {
        throw DomainError("option strike must be > 0");
    }
}

double option_payoff(OptionKind kind, double strike, double s) {
    switch (kind) {
        case OptionKind::Call: return s > strike ? s - strike : 0.0;
        case OptionKind::Put: return strike > s ? strike - s : 0.0;
        case OptionKind::Forward: return s - strike;
        default: throw MisuseError("option_payoff is for price options only");
    }
}

PriceEstimate pool_estimates(std::span<const PriceEstimate> parts) {
    std::size_t n = 0;
    double sum = 0.0;
    for (const auto& p : parts) {
        n += p.n_paths;
        sum += p.mean * static_cast<double>(p.n_paths);
    }
    if (n == 0) throw InsufficientDataError("no paths to pool");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& p : parts) {
        const double nb = static_cast<double>(p.n_paths);
        // std_err^2 * nb is the batch sample variance.
        ss += (nb - 1.0) * p.std_err * p.std_err * nb + nb * (p.mean - mean) * (p.mean - mean);
    }
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

namespace {

void check_bs_domain(double s, double strike, double sigma, double tau) {
    if (!(s > 0.0)) throw DomainError("bs: spot must be > 0");
    if (!(strike > 0.0)) throw DomainError("bs: strike must be > 0");
    if (!(sigma > 0.0)) throw DomainError("bs: sigma must be > 0");
    if (!(tau > 0.0)) throw DomainError("bs: tau must be > 0");
}

double bs_unchecked(double s, double strike, double r, double sigma, double tau, OptionKind kind) {
    const double sd = sigma * std::sqrt(tau);
    const double df = std::exp(-r * tau);
    const double d1 = (std::log(s / strike) + r * tau) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (kind == OptionKind::Call) return s * normal_cdf(d1) - strike * df * normal_cdf(d2);
    return strike * df * normal_cdf(-d2) - s * normal_cdf(-d1);
}

}  // namespace

double bs_price(double s, double strike, double r, double sigma, double tau, OptionKind kind) {
    check_bs_domain(s, strike, sigma, tau);
    if (kind != OptionKind::Call && kind != OptionKind::Put)
        throw DomainError("bs_price handles calls and puts only");
    return bs_unchecked(s, strike, r, sigma, tau, kind);
}

double bs_vega(double s, double strike, double r, double sigma, double tau) {
    check_bs_domain(s, strike, sigma, tau);
    const double sd = sigma * std::sqrt(tau);
    const double d1 = (std::log(s / strike) + r * tau) / sd + 0.5 * sd;
    return s * normal_pdf(d1) * std::sqrt(tau);
}

double bs_implied_vol(double price, double s, double strike, double r, double tau, OptionKind kind) {
    if (kind != OptionKind::Call && kind != OptionKind::Put)
        throw DomainError("implied vol needs a call or a put");
    if (!(s > 0.0) || !(strike > 0.0) || !(tau > 0.0))
        throw DomainError("implied vol: s, strike, tau must be > 0");
    if (!std::isfinite(price)) throw DomainError("implied vol: price must be finite");

    const double df_strike = strike * std::exp(-r * tau);
    const double lower = kind == OptionKind::Call ? std::max(s - df_strike, 0.0)
                                                  : std::max(df_strike - s, 0.0);
    const double upper = kind == OptionKind::Call ? s : df_strike;
    if (!(price > lower))
        throw OutOfBandError("price " + format_g17(price) + " is at or below the lower no-arbitrage bound " +
                                 format_g17(lower),
                             OutOfBandError::Bound::Lower);
    if (!(price < upper))
        throw OutOfBandError("price " + format_g17(price) + " is at or above the upper no-arbitrage bound " +
                                 format_g17(upper),
                             OutOfBandError::Bound::Upper);

    // Solve on the out-of-the-money side; parity moves the intrinsic part out.
    OptionKind side = kind;
    double target = price;
    if (kind == OptionKind::Call && df_strike < s) {
        side = OptionKind::Put;
        target = price - (s - df_strike);
    } else if (kind == OptionKind::Put && df_strike > s) {
        side = OptionKind::Call;
        target = price + (s - df_strike);
    }
    if (!(target > 0.0))
        throw OutOfBandError("time value underflows after parity conversion", OutOfBandError::Bound::Lower);

    const auto f = [&](double sigma) { return bs_unchecked(s, strike, r, sigma, tau, side) - target; };
    double lo = 1e-12;
    double hi = 1.0;
    while (f(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e4) throw OutOfBandError("implied vol exceeds 1e4", OutOfBandError::Bound::Upper);
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    double sigma = 0.5 * (lo + hi);
    for (int i = 0; i < 3; ++i) {
        const double v = bs_vega(s, strike, r, sigma, tau);
        if (!(v > 0.0)) break;
        const double next = sigma - f(sigma) / v;
        if (!(next > lo - 1e-12 && next < hi + 1e-12)) break;
        if (std::abs(f(next)) > std::abs(f(sigma))) break;
        sigma = next;
    }
    return sigma;
}

namespace {

struct Accumulator {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    PriceEstimate estimate() const {
        const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
        return {mean, std::sqrt(var / static_cast<double>(n)), n};
    }
};

void require_risk_neutral(const PathEnsemble& e) {
    if (e.kind() != PathKind::Price) throw MisuseError("pricing needs a price ensemble");
    if (e.measure() != Measure::RiskNeutral)
        throw MisuseError("pricing needs a risk-neutral ensemble, got " + to_string(e.measure()));
}

}  // namespace

PriceEstimate mc_price(const PathEnsemble& ensemble, const OptionSpec& option, double r) {
    option.validate();
    require_risk_neutral(ensemble);
    const auto& g = ensemble.grid();
    const std::size_t k0 = 0;
    const std::size_t k1 = g.require_node(g.t_start + option.expiry, "option expiry");
    const double df = std::exp(-r * option.expiry);
    Accumulator acc;
    for (std::size_t i = 0; i < ensemble.n_paths(); ++i) {
        const auto row = ensemble.path(i);
        double payoff = 0.0;
        if (is_variance(option.kind)) {
            double qv = 0.0;
            for (std::size_t k = k0; k < k1; ++k) {
                const double d = std::log(row[k + 1] / row[k]);
                qv += d * d;
            }
            const double avg = qv / option.expiry;
            payoff = option.kind == OptionKind::VarianceCall ? std::max(avg - option.strike, 0.0)
                                                             : std::max(option.strike - avg, 0.0);
        } else {
            payoff = option_payoff(option.kind, option.strike, row[k1]);
        }
        acc.add(df * payoff);
    }
    return acc.estimate();
}

double forward_price(double s0, double strike, double r, double tau) {
    if (!(s0 > 0.0)) throw DomainError("forward: s0 must be > 0");
    if (!(strike >= 0.0)) throw DomainError("forward: strike must be >= 0");
    if (!(tau > 0.0)) throw DomainError("forward: tau must be > 0");
    return s0 - strike * std::exp(-r * tau);
}

ParityAudit parity_audit(const PathEnsemble& ensemble, double strike, double expiry, double r) {
    require_risk_neutral(ensemble);
    const auto& g = ensemble.grid();
    const std::size_t k1 = g.require_node(g.t_start + expiry, "parity expiry");
    const double df = std::exp(-r * expiry);
    ParityAudit a;
    double sum_call = 0.0, sum_put = 0.0, sum_fwd = 0.0, max_s = 0.0;
    for (std::size_t i = 0; i < ensemble.n_paths(); ++i) {
        const double s = ensemble.at(i, k1);
        const double call = option_payoff(OptionKind::Call, strike, s);
        const double put = option_payoff(OptionKind::Put, strike, s);
        const double fwd = option_payoff(OptionKind::Forward, strike, s);
        const double scale = std::max(s, strike);
        const double res = std::abs(call - put - fwd);
        a.max_abs_residual = std::max(a.max_abs_residual, res);
        a.max_pathwise_residual = std::max(a.max_pathwise_residual, res / scale);
        sum_call += df * call;
        sum_put += df * put;
        sum_fwd += df * fwd;
        max_s = std::max(max_s, s);
    }
    const double n = static_cast<double>(ensemble.n_paths());
    a.scale = std::max(max_s, strike);
    a.aggregate_residual = std::abs(sum_call / n - sum_put / n - sum_fwd / n) / a.scale;
    const auto fwd = mc_price(ensemble, {OptionKind::Forward, strike, expiry}, r);
    const double s0 = ensemble.at(0, 0);
    a.martingale_gap = fwd.mean - forward_price(s0, strike, r, expiry);
    a.martingale_std_err = fwd.std_err;
    a.pass = a.max_pathwise_residual <= 1e-12 && a.aggregate_residual <= 1e-12;
    return a;
}

VarianceAudit variance_strike_zero_audit(const PathEnsemble& ensemble, const QVParams& qv, double T,
                                         double r, double kappa) {
    qv.validate();
    if (T < qv.T0) throw DomainError("variance audit needs T >= T0");
    VarianceAudit a;
    const double band = qv.theta / std::pow(T, qv.gamma);
    a.upper_strike = qv.alpha + band;
    a.lower_strike = std::max(0.0, qv.alpha - band);
    a.call_at_upper = mc_price(ensemble, {OptionKind::VarianceCall, a.upper_strike, T}, r);
    a.put_at_lower = mc_price(ensemble, {OptionKind::VariancePut, a.lower_strike, T}, r);
    a.tolerance = kappa * std::sqrt(ensemble.grid().dt / T);
    a.pass = a.call_at_upper.mean <= a.tolerance && a.put_at_lower.mean <= a.tolerance;
    return a;
}

std::vector<ImpliedVolSurfacePoint> implied_vol_points(const PathEnsemble& ensemble,
                                                       const MarketSpec& market,
                                                       std::span<const double> strikes,
                                                       std::span<const double> expiries) {
    if (strikes.empty() || expiries.empty()) throw DomainError("need nonempty strikes and expiries");
    std::vector<ImpliedVolSurfacePoint> out;
    out.reserve(strikes.size() * expiries.size());
    for (double T : expiries) {
        for (double K : strikes) {
            ImpliedVolSurfacePoint p;
            p.expiry_T = T;
            p.strike = K;
            const double forward = market.s0 * std::exp(market.r * T);
            p.kind = K >= forward ? OptionKind::Call : OptionKind::Put;
            const auto est = mc_price(ensemble, {p.kind, K, T}, market.r);
            p.price = est.mean;
            p.std_err = est.std_err;
            try {
                p.iv = bs_implied_vol(p.price, market.s0, K, market.r, T, p.kind);
                p.iv2 = p.iv * p.iv;
                const double vega = bs_vega(market.s0, K, market.r, p.iv, T);
                p.iv_std_err = vega > 0.0 ? p.std_err / vega : std::numeric_limits<double>::infinity();
                p.iv2_std_err = 2.0 * p.iv * p.iv_std_err;
            } catch (const OutOfBandError& e) {
                p.flag = e.bound() == OutOfBandError::Bound::Lower ? "out_of_band_lower" : "out_of_band_upper";
                p.iv = p.iv2 = std::numeric_limits<double>::quiet_NaN();
                p.iv_std_err = p.iv2_std_err = std::numeric_limits<double>::quiet_NaN();
            }
            out.push_back(p);
        }
    }
    return out;
}

std::vector<ImpliedVolSurfacePoint> implied_vol_surface(const VolSurface& surface,
                                                        const MarketSpec& market,
                                                        std::span<const double> strikes,
                                                        std::span<const double> expiries,
                                                        std::size_t n_paths, std::uint64_t seed,
                                                        const IvSurfaceOptions& options) {
    if (strikes.empty() || expiries.empty()) throw DomainError("need nonempty strikes and expiries");
    const double t_max = *std::max_element(expiries.begin(), expiries.end());
    const auto steps = static_cast<std::size_t>(std::llround(t_max / options.dt));
    PathGrid grid(0.0, options.dt, steps);
    // Only expiry prices are needed, so keep the coarsest grid holding all of them.
    std::size_t stride = 0;
    for (double T : expiries) stride = std::gcd(stride, grid.require_node(T, "expiry"));
    SimOptions sim = options.sim;
    sim.record_stride = stride;
    const auto ensemble = simulate_price(surface, DriftSpec::risk_neutral(market.r), market.s0, grid,
                                         n_paths, seed, sim);
    return implied_vol_points(ensemble, market, strikes, expiries);
}

SandwichReport envelope_sandwich_report(std::span<const ImpliedVolSurfacePoint> points,
                                        const VolSurface& surface, double n_se) {
    SandwichReport rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        if (!p.ok()) continue;
        const auto env = time_average_envelope(surface, 0.0, p.expiry_T);
        const double slack = n_se * p.iv2_std_err;
        const double margin = std::min(p.iv2 - (env.lower - slack), (env.upper + slack) - p.iv2);
        AuditLine line{"sandwich T=" + format_g17(p.expiry_T) + " K=" + format_g17(p.strike), margin,
                       margin >= 0.0};
        rep.worst_margin = std::min(rep.worst_margin, margin);
        rep.lines.push_back(std::move(line));
    }
    rep.pass = !rep.lines.empty() && rep.worst_margin >= 0.0;
    return rep;
}

SandwichReport flattening_report(std::span<const ImpliedVolSurfacePoint> points, const QVParams& qv,
                                 double n_se) {
    qv.validate();
    SandwichReport rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        if (!p.ok() || p.expiry_T < qv.T0) continue;
        const double bound = qv.theta / std::pow(p.expiry_T, qv.gamma) + n_se * p.iv2_std_err;
        const double margin = bound - std::abs(p.iv2 - qv.alpha);
        rep.lines.push_back({"flattening T=" + format_g17(p.expiry_T) + " K=" + format_g17(p.strike),
                             margin, margin >= 0.0});
        rep.worst_margin = std::min(rep.worst_margin, margin);
    }
    rep.pass = rep.worst_margin >= 0.0;
    return rep;
}

double iv2_spread(std::span<const ImpliedVolSurfacePoint> points, double expiry) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : points) {
        if (!p.ok() || std::abs(p.expiry_T - expiry) > 1e-12 * std::max(1.0, expiry)) continue;
        lo = std::min(lo, p.iv2);
        hi = std::max(hi, p.iv2);
    }
    if (!(hi >= lo)) throw InsufficientDataError("no invertible points at expiry " + format_g17(expiry));
    return hi - lo;
}

void write_iv_surface_csv(std::ostream& out, std::span<const ImpliedVolSurfacePoint> points,
                          const std::string& preamble) {
    out << preamble << "expiry,strike,price,std_err,iv,iv2,flag\n";
    for (const auto& p : points)
        out << format_g17(p.expiry_T) << ',' << format_g17(p.strike) << ',' << format_g17(p.price) << ','
            << format_g17(p.std_err) << ',' << format_g17(p.iv) << ',' << format_g17(p.iv2) << ','
            << p.flag << '\n';
}

}  // namespace qvlab
