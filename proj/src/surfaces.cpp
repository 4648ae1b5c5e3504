#include "qvlab/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qvlab/error.hpp"
#include "qvlab/paths.hpp"

namespace qvlab {

std::string to_string(SurfaceFamily family) {
    switch (family) {
        case SurfaceFamily::Constant: return "constant";
        case SurfaceFamily::Seasonal: return "seasonal";
        case SurfaceFamily::DecayingSmile: return "decaying_smile";
    }
    return "unknown";
}

SurfaceFamily surface_family_from_string(const std::string& s) {
    if (s == "constant") return SurfaceFamily::Constant;
    if (s == "seasonal") return SurfaceFamily::Seasonal;
    if (s == "decaying_smile") return SurfaceFamily::DecayingSmile;
    throw ConfigError("unknown surface family '" + s + "'");
}

namespace {

void require(bool ok, const char* constraint) {
    if (!ok) throw ParameterError(std::string(constraint) + " out of range");
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

VolSurface::VolSurface(const SurfaceParams& p) : p_(p) {
    require(finite_positive(p_.alpha), "alpha (need alpha > 0)");
    switch (p_.family) {
        case SurfaceFamily::Constant:
            p_.a = 0.0;
            p_.b = 0.0;
            break;
        case SurfaceFamily::Seasonal:
            require(std::isfinite(p_.a) && std::abs(p_.a) < 1.0, "a (need |a| < 1)");
            require(finite_positive(p_.omega), "omega (need omega > 0)");
            p_.b = 0.0;
            break;
        case SurfaceFamily::DecayingSmile:
            require(std::isfinite(p_.a) && std::abs(p_.a) < 1.0, "a (need |a| < 1)");
            require(finite_positive(p_.omega), "omega (need omega > 0)");
            require(std::isfinite(p_.b) && p_.b >= 0.0 && p_.b < 1.0, "b (need 0 <= b < 1)");
            require(finite_positive(p_.tau), "tau (need tau > 0)");
            require(finite_positive(p_.s_ref), "s_ref (need s_ref > 0)");
            break;
    }
    const double amp = 1.0 + std::abs(p_.a);
    M_ = p_.alpha * amp * (1.0 + p_.b);
    K_ = p_.alpha * amp * p_.b;
    theta_ = (p_.a != 0.0 ? 2.0 * p_.alpha * std::abs(p_.a) / p_.omega : 0.0) +
             p_.alpha * amp * p_.b * (p_.family == SurfaceFamily::DecayingSmile ? p_.tau : 0.0);
}

VolSurface VolSurface::make(const SurfaceParams& params) { return VolSurface(params); }

VolSurface VolSurface::constant(double alpha) {
    return make({SurfaceFamily::Constant, alpha, 0.0, 1.0, 0.0, 1.0, 100.0});
}

VolSurface VolSurface::seasonal(double alpha, double a, double omega) {
    return make({SurfaceFamily::Seasonal, alpha, a, omega, 0.0, 1.0, 100.0});
}

VolSurface VolSurface::decaying_smile(double alpha, double a, double omega, double b, double tau,
                                      double s_ref) {
    return make({SurfaceFamily::DecayingSmile, alpha, a, omega, b, tau, s_ref});
}

double VolSurface::time_factor(double t) const noexcept {
    if (p_.a == 0.0) return p_.alpha;
    return p_.alpha * (1.0 + p_.a * std::sin(p_.omega * t));
}

double VolSurface::integrated_time_factor(double t0, double t1) const noexcept {
    double v = t1 - t0;
    if (p_.a != 0.0) v += p_.a * (std::cos(p_.omega * t0) - std::cos(p_.omega * t1)) / p_.omega;
    return p_.alpha * v;
}

double VolSurface::psi_min() const noexcept { return -p_.s_ref / (1.0 + p_.s_ref); }

double VolSurface::sigma2_unchecked(double s, double t) const noexcept {
    const double base = time_factor(t);
    if (p_.family != SurfaceFamily::DecayingSmile || p_.b == 0.0) return base;
    const double d = s - p_.s_ref;
    const double psi = d / (1.0 + std::abs(d));
    return base * (1.0 + p_.b * std::exp(-t / p_.tau) * psi);
}

double VolSurface::sigma2(double s, double t) const {
    if (!(s > 0.0)) throw DomainError("sigma2: price s must be > 0");
    if (!(t >= 0.0)) throw DomainError("sigma2: time t must be >= 0");
    return sigma2_unchecked(s, t);
}

double eval_sigma2(const VolSurface& surface, double s, double t) { return surface.sigma2(s, t); }

namespace {

// int_{t0}^{t1} e^{-t/tau} (1 + a sin(omega t)) dt
double integrated_decay_factor(const SurfaceParams& p, double t0, double t1) {
    const double k = 1.0 / p.tau;
    double v = p.tau * (std::exp(-k * t0) - std::exp(-k * t1));
    if (p.a != 0.0) {
        const double w = p.omega;
        const auto F = [&](double t) {
            return -std::exp(-k * t) * (k * std::sin(w * t) + w * std::cos(w * t)) / (k * k + w * w);
        };
        v += p.a * (F(t1) - F(t0));
    }
    return v;
}

}  // namespace

TimeAverageEnvelope time_average_envelope(const VolSurface& surface, double V, double T) {
    if (!(T > 0.0)) throw DomainError("envelope: window length T must be > 0");
    if (!(V >= 0.0)) throw DomainError("envelope: window start V must be >= 0");
    const auto& p = surface.params();
    const double base = surface.integrated_time_factor(V, V + T) / T;
    if (!surface.price_dependent()) return {base, base, V, T};
    const double smile = p.alpha * p.b * integrated_decay_factor(p, V, V + T) / T;
    return {base + surface.psi_min() * smile, base + surface.psi_max() * smile, V, T};
}

CumulativeVariance CumulativeVariance::analytic(const VolSurface& surface) {
    if (surface.price_dependent())
        throw ConfigError("analytic Lambda is only available for price-independent surfaces");
    CumulativeVariance c;
    c.surface_ = std::make_shared<const VolSurface>(surface);
    return c;
}

CumulativeVariance CumulativeVariance::tabulated(double t_start, double dt,
                                                 std::vector<double> values,
                                                 std::vector<double> std_err) {
    if (!(dt > 0.0)) throw DomainError("tabulated Lambda needs dt > 0");
    if (values.size() < 2) throw ConfigError("tabulated Lambda needs at least 2 nodes");
    if (!std_err.empty() && std_err.size() != values.size())
        throw ConfigError("tabulated Lambda: std_err size mismatch");
    CumulativeVariance c;
    c.t_start_ = t_start;
    c.dt_ = dt;
    c.values_ = std::move(values);
    c.std_err_ = std::move(std_err);
    if (c.std_err_.empty()) c.std_err_.assign(c.values_.size(), 0.0);
    return c;
}

double CumulativeVariance::t_max() const noexcept {
    if (surface_) return std::numeric_limits<double>::infinity();
    return t_start_ + dt_ * static_cast<double>(values_.size() - 1);
}

namespace {

struct Segment {
    std::size_t k;
    double w;
};

Segment locate(double t, double t_start, double dt, std::size_t n) {
    const double pos = (t - t_start) / dt;
    if (pos < -1e-9 || pos > static_cast<double>(n - 1) * (1.0 + 1e-12) + 1e-9)
        throw RangeError("Lambda requested outside its tabulated range");
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    auto k = static_cast<std::size_t>(std::floor(clamped));
    if (k >= n - 1) k = n - 2;
    return {k, clamped - static_cast<double>(k)};
}

}  // namespace

double CumulativeVariance::operator()(double t) const {
    if (surface_) {
        if (t < 0.0) throw DomainError("Lambda(t) needs t >= 0");
        return surface_->integrated_time_factor(0.0, t);
    }
    const auto [k, w] = locate(t, t_start_, dt_, values_.size());
    return values_[k] + w * (values_[k + 1] - values_[k]);
}

double CumulativeVariance::rate(double t) const {
    if (surface_) return surface_->time_factor(t);
    const auto [k, w] = locate(t, t_start_, dt_, values_.size());
    (void)w;
    return (values_[k + 1] - values_[k]) / dt_;
}

double CumulativeVariance::std_err(double t) const {
    if (surface_) return 0.0;
    const auto [k, w] = locate(t, t_start_, dt_, values_.size());
    return std_err_[k] + w * (std_err_[k + 1] - std_err_[k]);
}

CumulativeVariance make_cumulative_variance(const VolSurface& surface,
                                            const PathEnsemble* ensemble) {
    if (!surface.price_dependent()) return CumulativeVariance::analytic(surface);
    if (ensemble == nullptr)
        throw ConfigError("Lambda for a price-dependent surface needs an ensemble context");
    if (ensemble->kind() != PathKind::Price)
        throw ConfigError("Lambda ensemble context must hold price paths");
    const auto& g = ensemble->grid();
    if (std::abs(g.t_start) > 1e-12) throw ConfigError("Lambda ensemble context must start at t = 0");

    const std::size_t n = ensemble->n_paths();
    const std::size_t nodes = g.n_nodes();
    std::vector<double> sum(nodes, 0.0), sum_sq(nodes, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = ensemble->path(i);
        double cum = 0.0;
        double prev = surface.sigma2_unchecked(row[0], g.time(0));
        for (std::size_t k = 1; k < nodes; ++k) {
            const double cur = surface.sigma2_unchecked(row[k], g.time(k));
            cum += 0.5 * (prev + cur) * g.dt;
            prev = cur;
            sum[k] += cum;
            sum_sq[k] += cum * cum;
        }
    }
    std::vector<double> mean(nodes), se(nodes);
    const double nd = static_cast<double>(n);
    for (std::size_t k = 0; k < nodes; ++k) {
        mean[k] = sum[k] / nd;
        const double var = n > 1 ? std::max(0.0, (sum_sq[k] - nd * mean[k] * mean[k]) / (nd - 1.0)) : 0.0;
        se[k] = std::sqrt(var / nd);
    }
    return CumulativeVariance::tabulated(g.t_start, g.dt, std::move(mean), std::move(se));
}

LambdaEstimate capital_lambda(const VolSurface& surface, double t, const PathEnsemble* ensemble) {
    if (!(t >= 0.0)) throw DomainError("Lambda(t) needs t >= 0");
    const auto lambda = make_cumulative_variance(surface, ensemble);
    return {lambda(t), lambda.std_err(t)};
}

}  // namespace qvlab
