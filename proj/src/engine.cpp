#include "qvlab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qvlab/error.hpp"
#include "qvlab/parallel.hpp"
#include "qvlab/rng.hpp"

namespace qvlab {

void validate_cov_params(const CovParams& cov, const CumulativeVariance& lambda) {
    if (!(cov.alpha > 0.0) || !std::isfinite(cov.alpha))
        throw ParameterError("cov alpha must be > 0");
    if (!std::isfinite(cov.beta)) throw ParameterError("cov beta must be finite");
    if (!cov.domain_end) {
        if (cov.beta < 0.0)
            throw ParameterError("beta < 0 requires a bounded domain end R (unbounded domain forces beta >= 0)");
        return;
    }
    const double R = *cov.domain_end;
    if (!(R > 0.0) || !std::isfinite(R)) throw ParameterError("domain_end R must be > 0");
    if (cov.beta < 0.0 && lambda.t_max() >= R) {
        const double floor = -cov.alpha * cov.alpha / lambda(R);
        if (!(cov.beta > floor))
            throw ParameterError("beta must exceed -alpha^2 / Lambda(R) = " + format_g17(floor));
    }
}

GrowthFunction::GrowthFunction(CovParams cov, CumulativeVariance lambda)
    : cov_(cov), lambda_(std::move(lambda)) {
    validate_cov_params(cov_, lambda_);
}

double GrowthFunction::g(double t) const {
    return 1.0 + cov_.beta / (cov_.alpha * cov_.alpha) * lambda_(t);
}

double GrowthFunction::log_derivative(double t) const {
    if (cov_.beta == 0.0) return 0.0;
    return cov_.beta / (cov_.alpha * cov_.alpha) * lambda_.rate(t) / g(t);
}

double GrowthFunction::clock(double t) const { return lambda_(t) / g(t); }

MeanLogReturn MeanLogReturn::zero() { return constant_rate(0.0); }

MeanLogReturn MeanLogReturn::constant_rate(double m) {
    return {[m](double) { return m; }, [m](double t) { return m * t; }};
}

DriftSpec DriftSpec::constant_mu(double mu) {
    DriftSpec d;
    d.form_ = DriftForm::ConstantMu;
    d.rate_ = mu;
    return d;
}

DriftSpec DriftSpec::risk_neutral(double r) {
    DriftSpec d;
    d.form_ = DriftForm::RiskNeutral;
    d.rate_ = r;
    return d;
}

DriftSpec DriftSpec::growth_implied(std::shared_ptr<const GrowthFunction> growth,
                                    MeanLogReturn lambda0, double s0) {
    if (!growth) throw ConfigError("growth-implied drift needs a growth function");
    if (!(s0 > 0.0)) throw DomainError("growth-implied drift needs s0 > 0");
    DriftSpec d;
    d.form_ = DriftForm::GrowthImplied;
    d.growth_ = std::move(growth);
    d.lambda0_ = std::move(lambda0);
    d.s0_ = s0;
    return d;
}

double DriftSpec::mu(double s, double t, double sigma2) const {
    switch (form_) {
        case DriftForm::ConstantMu:
        case DriftForm::RiskNeutral: return rate_;
        case DriftForm::GrowthImplied:
            return growth_->log_derivative(t) * (std::log(s / s0_) - lambda0_.cumulative(t)) +
                   lambda0_.rate(t) + 0.5 * sigma2;
    }
    return 0.0;
}

namespace {

void check_grid_and_paths(const PathGrid& grid, std::size_t n_paths) {
    if (!(grid.dt > 0.0)) throw DomainError("dt must be > 0");
    if (grid.n_steps == 0) throw DomainError("n_steps must be >= 1");
    if (n_paths == 0) throw DomainError("n_paths must be >= 1");
}

}  // namespace

PathEnsemble simulate_price(const VolSurface& surface, const DriftSpec& drift, double s0,
                            const PathGrid& grid, std::size_t n_paths, std::uint64_t seed,
                            const SimOptions& options) {
    check_grid_and_paths(grid, n_paths);
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw DomainError("s0 must be > 0");
    if (grid.t_start < 0.0) throw DomainError("grid must start at t >= 0");

    const std::size_t stride = options.record_stride;
    if (stride == 0 || grid.n_steps % stride != 0)
        throw DomainError("record_stride must divide n_steps");
    const PathGrid recorded(grid.t_start, grid.dt * static_cast<double>(stride), grid.n_steps / stride);
    PathEnsemble out(recorded, n_paths, PathKind::Price, drift.measure(), seed);
    const double dt = grid.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double log_s0 = std::log(s0);

    parallel_for(n_paths, resolve_threads(options.threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t id = options.first_path + i;
            NormalStream rng(seed, id);
            auto row = out.path(i);
            double x = log_s0;
            double s = s0;
            row[0] = s0;
            for (std::size_t k = 0; k < grid.n_steps; ++k) {
                const double t = grid.time(k);
                const double s2 = surface.sigma2_unchecked(s, t);
                const double mu = drift.mu(s, t, s2);
                const double z = options.forced_noise ? options.forced_noise(id, k) : rng.next();
                x += (mu - 0.5 * s2) * dt + std::sqrt(s2) * sqrt_dt * z;
                s = std::exp(x);
                if ((k + 1) % stride == 0) row[(k + 1) / stride] = s;
            }
        }
    });
    return out;
}

CenteredReturns simulate_centered_returns_with_lambda(const CovParams& cov,
                                                      const VolSurface& surface,
                                                      const PathGrid& grid, std::size_t n_paths,
                                                      std::uint64_t seed,
                                                      const SimOptions& options,
                                                      const PriceAnchor& anchor) {
    check_grid_and_paths(grid, n_paths);
    if (std::abs(grid.t_start) > 1e-12) throw DomainError("centered-return grid must start at 0");
    if (cov.domain_end && grid.t_end() > *cov.domain_end * (1.0 + 1e-12))
        throw ParameterError("grid extends beyond the domain end R");
    if (!(cov.alpha > 0.0)) throw ParameterError("cov alpha must be > 0");
    if (cov.beta < 0.0 && !cov.domain_end)
        throw ParameterError("beta < 0 requires a bounded domain end R");

    const unsigned threads = resolve_threads(options.threads);
    const std::size_t nodes = grid.n_nodes();
    const double kbeta = cov.beta / (cov.alpha * cov.alpha);
    PathEnsemble out(grid, n_paths, PathKind::CenteredLogReturn, Measure::Canonical, seed);

    if (!surface.price_dependent()) {
        auto lambda = CumulativeVariance::analytic(surface);
        GrowthFunction growth(cov, lambda);
        std::vector<double> g(nodes), lam(nodes);
        for (std::size_t k = 0; k < nodes; ++k) {
            lam[k] = lambda(grid.time(k));
            g[k] = 1.0 + kbeta * lam[k];
            if (!(g[k] > 0.0))
                throw ParameterError("g(t) <= 0 at t=" + format_g17(grid.time(k)) + " (illegal beta)");
        }
        // Per-step multiplier and exact noise scale g_{k+1} sqrt(dLambda / (g_k g_{k+1})).
        std::vector<double> ratio(grid.n_steps), scale(grid.n_steps);
        for (std::size_t k = 0; k < grid.n_steps; ++k) {
            ratio[k] = g[k + 1] / g[k];
            scale[k] = std::sqrt((lam[k + 1] - lam[k]) * g[k + 1] / g[k]);
        }
        parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                NormalStream rng(seed, i);
                auto row = out.path(i);
                double xbar = 0.0;
                row[0] = 0.0;
                for (std::size_t k = 0; k < grid.n_steps; ++k) {
                    const double z = options.forced_noise ? options.forced_noise(i, k) : rng.next();
                    xbar = ratio[k] * xbar + scale[k] * z;
                    row[k + 1] = xbar;
                }
            }
        });
        return {std::move(out), std::move(lambda)};
    }

    // Price-dependent: lockstep over paths so E sigma^2(S(t_k), t_k) can be
    // estimated from the ensemble at every node. Reductions run in path order.
    std::vector<NormalStream> streams;
    streams.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) streams.emplace_back(seed, i);
    std::vector<double> state(n_paths, 0.0), s2(n_paths, 0.0);
    std::vector<double> lam(nodes, 0.0), lam_se(nodes, 0.0);
    const double log_s0 = std::log(anchor.s0);
    double lam_k = 0.0;
    double g_k = 1.0;

    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double t = grid.time(k);
        const double shift = log_s0 + anchor.lambda0.cumulative(t);
        parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i)
                s2[i] = surface.sigma2_unchecked(std::exp(shift + state[i]), t);
        });
        double mean_s2 = 0.0;
        for (double v : s2) mean_s2 += v;
        mean_s2 /= static_cast<double>(n_paths);

        const double lam_next = lam_k + mean_s2 * grid.dt;
        const double g_next = 1.0 + kbeta * lam_next;
        if (!(g_next > 0.0))
            throw ParameterError("g(t) <= 0 at t=" + format_g17(grid.time(k + 1)) + " (illegal beta)");
        const double ratio = g_next / g_k;
        parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const double z = options.forced_noise ? options.forced_noise(i, k) : streams[i].next();
                state[i] = ratio * state[i] + std::sqrt(s2[i] * grid.dt * ratio) * z;
                out.path(i)[k + 1] = state[i];
            }
        });
        lam[k + 1] = lam_next;
        lam_k = lam_next;
        g_k = g_next;
    }
    auto lambda = CumulativeVariance::tabulated(0.0, grid.dt, std::move(lam), std::move(lam_se));
    return {std::move(out), std::move(lambda)};
}

PathEnsemble simulate_centered_returns(const CovParams& cov, const VolSurface& surface,
                                       const PathGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed, const SimOptions& options,
                                       const PriceAnchor& anchor) {
    return simulate_centered_returns_with_lambda(cov, surface, grid, n_paths, seed, options, anchor)
        .paths;
}

std::vector<double> ConditionalSamples::column(std::size_t j) const {
    std::vector<double> col(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) col[i] = at(i, j);
    return col;
}

ConditionalSamples simulate_canonical_conditional(const CovParams& cov, const VolSurface& surface,
                                                  double z, double x,
                                                  std::span<const double> horizons,
                                                  std::size_t n_paths, std::uint64_t seed,
                                                  const ConditionalOptions& options) {
    if (!(z > 0.0)) throw DomainError("conditioning time z must be > 0");
    if (horizons.empty()) throw DomainError("need at least one horizon time");
    if (n_paths == 0) throw DomainError("n_paths must be >= 1");
    for (std::size_t j = 0; j < horizons.size(); ++j) {
        if (horizons[j] < z) throw DomainError("horizon times must be >= z");
        if (j > 0 && horizons[j] < horizons[j - 1]) throw DomainError("horizon times must be sorted");
    }

    ConditionalSamples out;
    out.z = z;
    out.x = x;
    out.horizons.assign(horizons.begin(), horizons.end());
    const std::size_t N = horizons.size();

    if (!surface.price_dependent()) {
        GrowthFunction growth(cov, CumulativeVariance::analytic(surface));
        if (cov.domain_end && horizons.back() > *cov.domain_end)
            throw ParameterError("horizon beyond the domain end R");
        const double gz = growth.g(z);
        if (!(gz > 0.0)) throw ParameterError("g(z) <= 0 (illegal beta)");
        std::vector<double> g(N), dclock(N);
        double prev_clock = growth.clock(z);
        for (std::size_t j = 0; j < N; ++j) {
            g[j] = growth.g(horizons[j]);
            if (!(g[j] > 0.0)) throw ParameterError("g(t) <= 0 at a horizon (illegal beta)");
            const double c = growth.clock(horizons[j]);
            dclock[j] = std::max(0.0, c - prev_clock);
            prev_clock = c;
        }
        const double pinned = x / gz;
        out.n_samples = n_paths;
        out.values.assign(n_paths * N, 0.0);
        parallel_for(n_paths, resolve_threads(options.sim.threads), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                NormalStream rng(seed, i);
                double b = pinned;
                for (std::size_t j = 0; j < N; ++j) {
                    const double zj = options.sim.forced_noise ? options.sim.forced_noise(i, j) : rng.next();
                    b += std::sqrt(dclock[j]) * zj;
                    out.values[i * N + j] = g[j] * b;
                }
            }
        });
        out.exact = true;
        return out;
    }

    // Binned conditioning on simulated paths.
    const double dt = options.fallback_dt;
    const auto steps = static_cast<std::size_t>(std::ceil(horizons.back() / dt - 1e-9));
    PathGrid grid(0.0, dt, std::max<std::size_t>(1, steps));
    const auto sim = simulate_centered_returns(cov, surface, grid, n_paths, seed, options.sim,
                                               options.anchor);
    const std::size_t kz = grid.require_node(z, "conditioning time z");
    std::vector<std::size_t> kh(N);
    for (std::size_t j = 0; j < N; ++j) kh[j] = grid.require_node(horizons[j], "horizon");
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (std::abs(sim.at(i, kz) - x) > options.fallback_bin_half_width) continue;
        for (std::size_t j = 0; j < N; ++j) out.values.push_back(sim.at(i, kh[j]));
        ++out.n_samples;
    }
    if (out.n_samples == 0)
        throw InsufficientDataError("no simulated path fell in the conditioning bin");
    out.exact = false;
    return out;
}

DriftSpec drift_from_growth(const CovParams& cov, const VolSurface& surface,
                            const MeanLogReturn& lambda0, double s0,
                            const std::optional<CumulativeVariance>& lambda) {
    if (!(s0 > 0.0)) throw DomainError("s0 must be > 0");
    if (!lambda0.rate || !lambda0.cumulative) throw ConfigError("mean log return function missing");
    CumulativeVariance lam = lambda ? *lambda : make_cumulative_variance(surface, nullptr);
    auto growth = std::make_shared<const GrowthFunction>(cov, std::move(lam));
    return DriftSpec::growth_implied(std::move(growth), lambda0, s0);
}

PathEnsemble integrated_variance_path(const VolSurface& surface, double s0, const PathGrid& grid) {
    if (surface.price_dependent())
        throw ConfigError("integrated-variance path needs a price-independent surface");
    if (!(s0 > 0.0)) throw DomainError("s0 must be > 0");
    PathEnsemble out(grid, 1, PathKind::Price, Measure::Physical, 0);
    auto row = out.path(0);
    double x = std::log(s0);
    row[0] = s0;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        x += std::sqrt(surface.integrated_time_factor(grid.time(k), grid.time(k + 1)));
        row[k + 1] = std::exp(x);
    }
    return out;
}

}  // namespace qvlab
