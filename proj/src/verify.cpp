#include "qvlab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <sstream>

#include "qvlab/covmodel.hpp"
#include "qvlab/engine.hpp"
#include "qvlab/error.hpp"
#include "qvlab/forecast.hpp"
#include "qvlab/pricing.hpp"
#include "qvlab/quadvar.hpp"
#include "qvlab/rng.hpp"

namespace qvlab {

bool SuiteResult::pass() const {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"qv",         "martingale", "parity", "variance",
                                                   "ivsurface",  "covariance", "wsm",    "autocorr",
                                                   "clt",        "pv",         "determinism"};
    return names;
}

namespace {

CheckResult at_most(std::string id, std::string check, double measured, double bound) {
    return {std::move(id), std::move(check), measured, bound, false, measured <= bound};
}

CheckResult at_least(std::string id, std::string check, double measured, double bound) {
    return {std::move(id), std::move(check), measured, bound, true, measured >= bound};
}

std::string checks_csv(const std::vector<CheckResult>& checks) {
    std::ostringstream out;
    out << "criterion_id,check,measured,bound,pass\n";
    for (const auto& c : checks)
        out << c.criterion_id << ',' << c.check << ',' << format_g17(c.measured) << ','
            << format_g17(c.bound) << ',' << (c.pass ? "true" : "false") << '\n';
    return out.str();
}

SimOptions sim_options(const VerifyOptions& o) {
    SimOptions s;
    s.threads = o.threads;
    return s;
}

// Criterion 1: QV convergence on a constant surface and the (alpha, gamma)
// fit on deterministic seasonal windows.
SuiteResult suite_qv(const VerifyOptions& o) {
    SuiteResult r{"qv", 1, {}, {}, 0.0};
    constexpr double alpha = 0.04;
    const auto constant = VolSurface::constant(alpha);
    const PathGrid grid(0.0, 1e-3, 40000);
    const auto ens = simulate_price(constant, DriftSpec::constant_mu(0.0), 100.0, grid, 200,
                                    derive_seed(o.seed, "qv"), sim_options(o));
    std::vector<QVReport> reports;
    double mean_dev_40 = 0.0;
    for (double T : {5.0, 10.0, 20.0, 40.0}) {
        double dev = 0.0;
        for (std::size_t i = 0; i < ens.n_paths(); ++i) {
            reports.push_back(realized_qv(ens, i, 0.0, T));
            dev += std::abs(reports.back().time_avg - alpha);
        }
        if (T == 40.0) mean_dev_40 = dev / static_cast<double>(ens.n_paths());
    }
    r.checks.push_back(at_most("1a", "mean |QV/T - alpha| at T=40", mean_dev_40, 0.002));
    std::ostringstream qv_csv;
    write_qv_reports_csv(qv_csv, reports);
    r.artifacts["qv_constant.csv"] = qv_csv.str();

    // Window lengths n + 1/4 keep the seasonal deviation alpha a / (omega T) nonzero.
    const auto seasonal = VolSurface::seasonal(alpha, 0.5, 2.0 * std::numbers::pi);
    const auto path = to_price_path(integrated_variance_path(seasonal, 100.0, PathGrid(0.0, 1e-3, 80250)), 0);
    std::vector<QVReport> windows;
    for (double T : {5.25, 10.25, 20.25, 40.25, 80.25}) windows.push_back(realized_qv(path, 0.0, T));
    const auto fit = fit_qv_params(windows);
    const double gamma = fit.gamma_hat.value_or(std::numeric_limits<double>::quiet_NaN());
    r.checks.push_back(at_most("1b", "|gamma_hat - 1| seasonal fit", std::abs(gamma - 1.0), 0.1));
    r.checks.push_back(at_most("1c", "|alpha_hat - 0.04| seasonal fit", std::abs(fit.alpha_hat - alpha), 0.001));
    std::ostringstream fit_csv;
    write_qv_reports_csv(fit_csv, windows);
    fit_csv << "# alpha_hat = " << format_g17(fit.alpha_hat) << "\n# theta_hat = " << format_g17(fit.theta_hat)
            << "\n# gamma_hat = " << format_g17(gamma) << '\n';
    r.artifacts["qv_seasonal_fit.csv"] = fit_csv.str();
    return r;
}

// Criterion 2: discounted price is a martingale under the risk-neutral drift.
SuiteResult suite_martingale(const VerifyOptions& o) {
    SuiteResult r{"martingale", 2, {}, {}, 0.0};
    constexpr double s0 = 100.0, rate = 0.05;
    const auto ens = simulate_price(VolSurface::constant(0.04), DriftSpec::risk_neutral(rate), s0,
                                    PathGrid(0.0, 0.01, 100), 100000, derive_seed(o.seed, "martingale"),
                                    sim_options(o));
    const auto fwd = mc_price(ens, {OptionKind::Forward, 0.0, 1.0}, rate);
    r.checks.push_back(at_most("2", "|mean(e^-rT S_T) - s0| vs 3 SE", std::abs(fwd.mean - s0), 3.0 * fwd.std_err));
    std::ostringstream a;
    a << "mean,std_err,n\n" << format_g17(fwd.mean) << ',' << format_g17(fwd.std_err) << ',' << fwd.n_paths << '\n';
    r.artifacts["martingale.csv"] = a.str();
    return r;
}

// Criterion 3: put-call parity holds path by path.
SuiteResult suite_parity(const VerifyOptions& o) {
    SuiteResult r{"parity", 3, {}, {}, 0.0};
    constexpr double s0 = 100.0;
    struct Case {
        const char* name;
        VolSurface surface;
        double rate;
    };
    const std::vector<Case> cases = {
        {"constant", VolSurface::constant(0.04), 0.05},
        {"seasonal", VolSurface::seasonal(0.04, 0.5, 2.0 * std::numbers::pi), 0.02},
        {"decaying_smile", VolSurface::decaying_smile(0.04, 0.0, 1.0, 0.8, 1.0, 100.0), 0.0},
    };
    double worst_path = 0.0, worst_aggregate = 0.0;
    std::ostringstream a;
    a << "surface,strike,expiry,max_abs_residual,aggregate_residual,martingale_gap,martingale_std_err\n";
    for (const auto& c : cases) {
        const auto ens = simulate_price(c.surface, DriftSpec::risk_neutral(c.rate), s0, PathGrid(0.0, 0.01, 100),
                                        10000, derive_seed(o.seed, std::string("parity-") + c.name),
                                        sim_options(o));
        for (double expiry : {0.25, 0.5, 1.0})
            for (double strike : {80.0, 90.0, 100.0, 110.0, 120.0}) {
                const auto p = parity_audit(ens, strike, expiry, c.rate);
                worst_path = std::max(worst_path, p.max_abs_residual / s0);
                worst_aggregate = std::max(worst_aggregate, p.aggregate_residual);
                a << c.name << ',' << format_g17(strike) << ',' << format_g17(expiry) << ','
                  << format_g17(p.max_abs_residual) << ',' << format_g17(p.aggregate_residual) << ','
                  << format_g17(p.martingale_gap) << ',' << format_g17(p.martingale_std_err) << '\n';
            }
    }
    r.checks.push_back(at_most("3a", "max pathwise parity residual / s0", worst_path, 1e-12));
    r.checks.push_back(at_most("3b", "max |mc call - mc put - mc forward| / scale", worst_aggregate, 1e-12));
    r.artifacts["parity.csv"] = a.str();
    return r;
}

// Criterion 4: variance options struck on the envelope bound are worthless.
SuiteResult suite_variance(const VerifyOptions& o) {
    SuiteResult r{"variance", 4, {}, {}, 0.0};
    constexpr double alpha = 0.04, a = 0.5, omega = 2.0 * std::numbers::pi, T = 10.0, dt = 1e-4;
    const double theta = 2.0 * alpha * a / omega;
    const QVParams qv{alpha, theta, 1.0, 1.0};
    const auto surface = VolSurface::seasonal(alpha, a, omega);
    const PathGrid grid(0.0, dt, 100000);
    const std::uint64_t seed = derive_seed(o.seed, "variance");
    // Ten batches of 100 paths (substreams 0..999) keep memory bounded.
    constexpr std::size_t batches = 10, per_batch = 100;
    std::vector<PriceEstimate> upper, lower_put, violation;
    std::optional<VarianceAudit> audit;
    for (std::size_t b = 0; b < batches; ++b) {
        SimOptions sim = sim_options(o);
        sim.first_path = b * per_batch;
        const auto ens = simulate_price(surface, DriftSpec::risk_neutral(0.0), 100.0, grid, per_batch, seed, sim);
        audit = variance_strike_zero_audit(ens, qv, T, 0.0);
        upper.push_back(audit->call_at_upper);
        lower_put.push_back(audit->put_at_lower);
        violation.push_back(mc_price(ens, {OptionKind::VarianceCall, alpha - theta / T, T}, 0.0));
    }
    const double tol = audit->tolerance;
    const auto cu = pool_estimates(upper);
    const auto pl = pool_estimates(lower_put);
    const auto cv = pool_estimates(violation);
    r.checks.push_back(at_most("4a", "variance call at alpha+theta/T vs kappa sqrt(dt/T)", cu.mean, tol));
    r.checks.push_back(at_least("4b", "variance call at alpha-theta/T vs 10 x tolerance", cv.mean, 10.0 * tol));
    r.checks.push_back(at_most("4c", "variance put at alpha-theta/T vs kappa sqrt(dt/T)", pl.mean, tol));
    std::ostringstream out;
    out << "option,strike,mean,std_err,n\n";
    const auto row = [&](const char* name, double k, const PriceEstimate& e) {
        out << name << ',' << format_g17(k) << ',' << format_g17(e.mean) << ',' << format_g17(e.std_err) << ','
            << e.n_paths << '\n';
    };
    row("variance_call", audit->upper_strike, cu);
    row("variance_put", audit->lower_strike, pl);
    row("variance_call", alpha - theta / T, cv);
    out << "# tolerance = " << format_g17(tol) << '\n';
    r.artifacts["variance_audit.csv"] = out.str();
    return r;
}

// Criterion 5: implied variances sit inside the envelope and flatten.
SuiteResult suite_ivsurface(const VerifyOptions& o) {
    SuiteResult r{"ivsurface", 5, {}, {}, 0.0};
    const auto surface = VolSurface::decaying_smile(0.04, 0.0, 1.0, 0.8, 1.0, 100.0);
    const std::vector<double> strikes = {80, 90, 100, 110, 120};
    const std::vector<double> expiries = {0.25, 1, 5, 25};
    IvSurfaceOptions opt;
    opt.dt = 0.01;
    opt.sim = sim_options(o);
    const auto points = implied_vol_surface(surface, {100.0, 0.0}, strikes, expiries, 200000,
                                            derive_seed(o.seed, "ivsurface"), opt);
    const auto sandwich = envelope_sandwich_report(points, surface, 3.0);
    r.checks.push_back(at_least("5a", "worst envelope sandwich margin (3 SE)", sandwich.worst_margin, 0.0));
    const double short_spread = iv2_spread(points, 0.25);
    const double long_spread = iv2_spread(points, 25.0);
    r.checks.push_back(at_most("5b", "iv2 spread T=25 / spread T=0.25", long_spread / short_spread, 0.1));
    // theta' = alpha b tau bounds |envelope - alpha| T for this family; onset T0 = 1.
    const QVParams flat{0.04, 0.04 * 0.8 * 1.0, 1.0, 1.0};
    const auto flattening = flattening_report(points, flat, 3.0);
    r.checks.push_back(at_least("5c", "worst flattening margin for T >= 1", flattening.worst_margin, 0.0));
    std::ostringstream csv;
    write_iv_surface_csv(csv, points);
    r.artifacts["iv_surface.csv"] = csv.str();
    return r;
}

// Criterion 6: empirical covariances match the model and the fit recovers it.
SuiteResult suite_covariance(const VerifyOptions& o) {
    SuiteResult r{"covariance", 6, {}, {}, 0.0};
    const CovParams cov{0.04, 0.01, std::nullopt};
    const auto ens = simulate_centered_returns(cov, VolSurface::constant(0.04), PathGrid(0.0, 0.05, 260), 100000,
                                               derive_seed(o.seed, "covariance"), sim_options(o));
    const auto model = CovarianceModel::constant(cov);
    const std::vector<double> times = {1, 2, 4, 8};
    double worst_entry = 0.0, worst_fit = 0.0;
    for (double z : {0.0, 5.0}) {
        const auto emp = empirical_covariance(ens, z, times);
        for (std::size_t i = 0; i < times.size(); ++i)
            for (std::size_t j = i; j < times.size(); ++j) {
                const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
                const double exact = model_covariance(model, z, times[i], times[j]);
                worst_entry = std::max(worst_entry, std::abs(emp.matrix(ii, jj) - exact) / emp.std_err_matrix(ii, jj));
            }
        const auto fit = fit_cov_params(emp);
        worst_fit = std::max({worst_fit, std::abs(fit.params.alpha - cov.alpha) / fit.alpha_std_err,
                              std::abs(fit.params.beta - cov.beta) / fit.beta_std_err});
        std::ostringstream csv;
        write_covariance_csv(csv, emp);
        csv << "# alpha_hat = " << format_g17(fit.params.alpha) << " +- " << format_g17(fit.alpha_std_err)
            << "\n# beta_hat = " << format_g17(fit.params.beta) << " +- " << format_g17(fit.beta_std_err) << '\n';
        r.artifacts["covariance_z" + format_g17(z) + ".csv"] = csv.str();
    }
    r.checks.push_back(at_most("6a", "max |empirical - exact| / jackknife SE", worst_entry, 3.0));
    r.checks.push_back(at_most("6b", "max |fit - truth| / SE over (alpha, beta), z in {0,5}", worst_fit, 3.0));
    return r;
}

// Criterion 7: the model covariance is exactly wide-sense Markov.
SuiteResult suite_wsm(const VerifyOptions& o) {
    SuiteResult r{"wsm", 7, {}, {}, 0.0};
    NormalStream rng(derive_seed(o.seed, "wsm"), 0);
    double worst = 0.0;
    for (int d = 0; d < 1000; ++d) {
        double t[3] = {0.01 + 50.0 * rng.next_uniform(), 0.01 + 50.0 * rng.next_uniform(),
                       0.01 + 50.0 * rng.next_uniform()};
        std::sort(t, t + 3);
        const double alpha = 0.005 + 0.2 * rng.next_uniform();
        CovParams cov{alpha, 0.0, std::nullopt};
        if (d % 2 == 0) {
            cov.beta = 0.1 * rng.next_uniform();
        } else {
            // Bounded domain [0, R] admits beta > -alpha^2 / Lambda(R) = -alpha / R.
            const double R = t[2] * (1.0 + rng.next_uniform());
            cov.domain_end = R;
            cov.beta = -0.99 * rng.next_uniform() * alpha / R;
        }
        const auto model = CovarianceModel::constant(cov);
        worst = std::max(worst, std::abs(wsm_residual(covariance_fn(model, 0.0), t[0], t[1], t[2])));
    }
    r.checks.push_back(at_most("7", "max |q| over 1000 random triples", worst, 1e-12));
    return r;
}

// Criterion 8: return and squared-return autocorrelations at scale sT.
SuiteResult suite_autocorr(const VerifyOptions& o) {
    SuiteResult r{"autocorr", 8, {}, {}, 0.0};
    constexpr double T = 100.0, s = 1.0, t = 2.0, u = 1.0;
    constexpr std::size_t n = 10000;
    std::ostringstream csv;
    csv << "beta,kind,value,std_err,asymptotic\n";
    for (double beta : {0.01, 0.0}) {
        const CovParams cov{0.04, beta, std::nullopt};
        // The centered-return scheme is exact in law, so nodes at multiples of T suffice.
        const auto ens = simulate_centered_returns(cov, VolSurface::constant(0.04), PathGrid(0.0, T, 4), n,
                                                   derive_seed(o.seed, "autocorr-" + format_g17(beta)),
                                                   sim_options(o));
        for (auto kind : {AutocorrKind::Returns, AutocorrKind::SquaredReturns}) {
            const double target = autocorr_asymptotic(cov, kind, s, t, u, T, 2.0);
            const auto rep = empirical_autocorr(ens, kind, 0.0, s, t, u, T, target);
            const bool ret = kind == AutocorrKind::Returns;
            const std::string id = beta > 0 ? (ret ? "8a" : "8b") : (ret ? "8c" : "8d");
            char label[96];
            std::snprintf(label, sizeof label, "|rho_hat - %g| %s beta=%g vs 3 SE", target,
                          to_string(kind).c_str(), beta);
            r.checks.push_back(at_most(id, label,
                                       std::abs(rep.value - target), 3.0 * rep.std_err));
            csv << format_g17(beta) << ',' << to_string(kind) << ',' << format_g17(rep.value) << ','
                << format_g17(rep.std_err) << ',' << format_g17(target) << '\n';
        }
    }
    r.artifacts["autocorr.csv"] = csv.str();
    return r;
}

// Criterion 9: exact conditional samples against the corrected forecast.
SuiteResult suite_clt(const VerifyOptions& o) {
    SuiteResult r{"clt", 9, {}, {}, 0.0};
    constexpr double z = 1.0, t = 1.0, T = 100.0, x = 0.1;
    const CovParams cov{0.04, 0.01, std::nullopt};
    const std::vector<double> horizons = {(z + t) * T};
    ConditionalOptions copt;
    copt.sim = sim_options(o);
    const auto samples = simulate_canonical_conditional(cov, VolSurface::constant(0.04), z * T, x * std::sqrt(T),
                                                        horizons, 10000, derive_seed(o.seed, "clt"), copt);
    const std::vector<double> ts = {t};
    const auto forecast = corrected_forecast(x, z, ts, cov, T, 2.0);
    const auto audit = clt_audit(samples, forecast);
    r.checks.push_back(at_most("9a", "KS statistic vs corrected forecast (1% critical)", audit.ks[0], audit.ks_critical));
    r.checks.push_back(at_most("9b", "|sample mean - 0.196| vs 3 SE", std::abs(audit.sample_mean(0) - 0.196),
                               3.0 * audit.mean_std_err(0)));
    r.checks.push_back(at_most("9c", "|sample variance - 0.0784| vs 3 SE", std::abs(audit.sample_cov(0, 0) - 0.0784),
                               3.0 * audit.cov_std_err(0, 0)));
    std::ostringstream csv;
    csv << "ks,ks_critical,mean,mean_se,variance,variance_se,psi,theta\n"
        << format_g17(audit.ks[0]) << ',' << format_g17(audit.ks_critical) << ',' << format_g17(audit.sample_mean(0))
        << ',' << format_g17(audit.mean_std_err(0)) << ',' << format_g17(audit.sample_cov(0, 0)) << ','
        << format_g17(audit.cov_std_err(0, 0)) << ',' << format_g17(forecast.mean(0)) << ','
        << format_g17(forecast.cov(0, 0)) << '\n';
    r.artifacts["clt.csv"] = csv.str();
    return r;
}

// Criterion 10: PV of a single call against the log-normal closed form and
// exact cancellation of a parity triple.
SuiteResult suite_pv(const VerifyOptions& o) {
    SuiteResult r{"pv", 10, {}, {}, 0.0};
    constexpr double s0 = 100.0, s_z = 105.0, z = 1.0, T = 1.0, alpha = 0.04, rate = 0.05;
    const double x = std::log(s_z / s0) / std::sqrt(T);
    const std::vector<double> times = {0.5, 1.0};
    const auto forecast = limit_forecast(x, z, times, alpha);
    const auto prices = lognormal_price_forecast(s0, s_z, MeanLogReturn::zero(), forecast);
    const double strike = std::exp(prices.mean_log(1) + 0.5 * prices.cov_log(1, 1));  // forward ATM
    const Portfolio call{{{1.0, InstrumentKind::EuropeanOption, {OptionKind::Call, strike, 1.0}, 0.0}}};
    const auto pv = portfolio_pv(call, prices, rate, 100000, derive_seed(o.seed, "pv"));
    r.checks.push_back(at_most("10a", "|MC call PV - log-normal closed form| vs 3 SE",
                               std::abs(pv.mean_pv - pv.closed_form.value()), 3.0 * pv.std_err));
    const Portfolio triple{{{1.0, InstrumentKind::EuropeanOption, {OptionKind::Call, strike, 1.0}, 0.0},
                            {-1.0, InstrumentKind::EuropeanOption, {OptionKind::Put, strike, 1.0}, 0.0},
                            {-1.0, InstrumentKind::EuropeanOption, {OptionKind::Forward, strike, 1.0}, 0.0}}};
    const auto zero = portfolio_pv(triple, prices, rate, 100000, derive_seed(o.seed, "pv-triple"));
    r.checks.push_back(at_most("10b", "max(|mean_pv|, var_pv) of parity triple", std::max(std::abs(zero.mean_pv), zero.var_pv), 0.0));
    std::ostringstream csv;
    csv << "portfolio,mean_pv,var_pv,std_err,closed_form\n"
        << "call," << format_g17(pv.mean_pv) << ',' << format_g17(pv.var_pv) << ',' << format_g17(pv.std_err) << ','
        << format_g17(pv.closed_form.value()) << '\n'
        << "parity_triple," << format_g17(zero.mean_pv) << ',' << format_g17(zero.var_pv) << ','
        << format_g17(zero.std_err) << ",\n";
    r.artifacts["pv.csv"] = csv.str();
    return r;
}

class ThreadsEnv {
public:
    ThreadsEnv() {
        if (const char* v = std::getenv("QVLAB_THREADS")) saved_ = v;
    }
    ~ThreadsEnv() {
        if (saved_) setenv("QVLAB_THREADS", saved_->c_str(), 1);
        else unsetenv("QVLAB_THREADS");
    }
    void set(const char* v) { setenv("QVLAB_THREADS", v, 1); }

private:
    std::optional<std::string> saved_;
};

}  // namespace

SuiteResult run_suite(const std::string& name, const VerifyOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r;
    if (name == "qv") r = suite_qv(options);
    else if (name == "martingale") r = suite_martingale(options);
    else if (name == "parity") r = suite_parity(options);
    else if (name == "variance") r = suite_variance(options);
    else if (name == "ivsurface") r = suite_ivsurface(options);
    else if (name == "covariance") r = suite_covariance(options);
    else if (name == "wsm") r = suite_wsm(options);
    else if (name == "autocorr") r = suite_autocorr(options);
    else if (name == "clt") r = suite_clt(options);
    else if (name == "pv") r = suite_pv(options);
    else throw ConfigError("unknown suite '" + name + "'");
    r.artifacts["checks.csv"] = checks_csv(r.checks);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<SuiteResult> run_verification(const std::string& selection, const VerifyOptions& options) {
    if (selection != "all" && selection != "determinism") return {run_suite(selection, options)};

    std::vector<std::string> names(suite_names().begin(), suite_names().end() - 1);
    VerifyOptions env_driven = options;
    env_driven.threads = 0;
    ThreadsEnv env;
    std::vector<SuiteResult> first, second;
    env.set("1");
    for (const auto& n : names) first.push_back(run_suite(n, env_driven));
    env.set("8");
    for (const auto& n : names) second.push_back(run_suite(n, env_driven));

    SuiteResult det{"determinism", 11, {}, {}, 0.0};
    std::size_t compared = 0, mismatched = 0;
    std::ostringstream listing;
    listing << "suite,artifact,bytes,identical\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        det.seconds += first[i].seconds + second[i].seconds;
        for (const auto& [file, text] : first[i].artifacts) {
            const auto it = second[i].artifacts.find(file);
            const bool same = it != second[i].artifacts.end() && it->second == text;
            ++compared;
            if (!same) ++mismatched;
            listing << names[i] << ',' << file << ',' << text.size() << ',' << (same ? "true" : "false") << '\n';
        }
        if (first[i].artifacts.size() != second[i].artifacts.size()) ++mismatched;
    }
    det.checks.push_back(at_most("11", "artifacts differing between QVLAB_THREADS=1 and 8 (of " +
                                           std::to_string(compared) + ")",
                                 static_cast<double>(mismatched), 0.0));
    det.artifacts["determinism.csv"] = listing.str();

    std::vector<SuiteResult> out;
    if (selection == "all") out = std::move(first);
    out.push_back(std::move(det));
    return out;
}

nlohmann::json verify_report_json(const std::vector<SuiteResult>& results) {
    auto arr = nlohmann::json::array();
    for (const auto& s : results)
        for (const auto& c : s.checks)
            arr.push_back({{"criterion_id", c.criterion_id},
                           {"suite", s.suite},
                           {"check", c.check},
                           {"measured", c.measured},
                           {"bound", c.bound},
                           {"comparison", c.at_least ? ">=" : "<="},
                           {"pass", c.pass}});
    return arr;
}

std::string criterion_line(const SuiteResult& result) {
    std::ostringstream out;
    out << "criterion " << result.criterion << " (" << result.suite << ") " << (result.pass() ? "PASS" : "FAIL");
    for (const auto& c : result.checks) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g %s %.6g", c.measured, c.at_least ? ">=" : "<=", c.bound);
        out << " | " << c.criterion_id << ' ' << c.check << ": " << buf << (c.pass ? "" : " [fail]");
    }
    return out.str();
}

}  // namespace qvlab
