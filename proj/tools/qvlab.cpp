// qvlab command-line front end.
//
// Every subcommand reads an INI config (--config) and writes its artifacts to
// --out. Artifacts embed the resolved config, so any of them can be passed
// back as --config to reproduce it byte for byte.
//
// Exit codes: 0 success, 1 validation or input error, 2 acceptance failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "qvlab/config.hpp"
#include "qvlab/covmodel.hpp"
#include "qvlab/engine.hpp"
#include "qvlab/error.hpp"
#include "qvlab/forecast.hpp"
#include "qvlab/pricing.hpp"
#include "qvlab/quadvar.hpp"
#include "qvlab/rng.hpp"
#include "qvlab/surfaces.hpp"
#include "qvlab/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qvlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitAcceptance = 2;

Config load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        // JSON artifact: the resolved config sits under "config".
        const auto doc = json::parse(text, nullptr, false);
        if (doc.is_discarded() || !doc.contains("config") || !doc["config"].is_string())
            throw ConfigError("'" + path + "' is JSON but carries no embedded config");
        return Config::parse_string(doc["config"].get<std::string>());
    }
    return Config::parse_string(text);
}

VolSurface surface_from(const Config& c) {
    c.require_section("surface");
    SurfaceParams p;
    p.family = surface_family_from_string(c.get_string("surface", "family"));
    p.alpha = c.get_double("surface", "alpha");
    if (p.family != SurfaceFamily::Constant) {
        p.a = c.get_double("surface", "a", 0.0);
        p.omega = c.get_double("surface", "omega", 1.0);
    }
    if (p.family == SurfaceFamily::DecayingSmile) {
        p.b = c.get_double("surface", "b");
        p.tau = c.get_double("surface", "tau", 1.0);
        p.s_ref = c.get_double("surface", "s_ref", 100.0);
    }
    return VolSurface::make(p);
}

struct EngineSection {
    PathGrid grid;
    std::size_t n_paths;
    std::uint64_t seed;
};

EngineSection engine_from(const Config& c) {
    c.require_section("engine");
    const double dt = c.get_double("engine", "dt");
    const auto steps = c.get_u64("engine", "n_steps");
    const auto paths = c.get_u64("engine", "n_paths");
    const auto seed = c.get_u64("engine", "seed");
    if (!(dt > 0.0)) throw ConfigError("engine.dt must be > 0");
    if (steps == 0) throw ConfigError("engine.n_steps must be >= 1");
    if (paths == 0) throw ConfigError("engine.n_paths must be >= 1");
    return {PathGrid(0.0, dt, steps), paths, seed};
}

MarketSpec market_from(const Config& c) {
    c.require_section("market");
    MarketSpec m{c.get_double("market", "s0"), c.get_double("market", "r", 0.0)};
    if (!(m.s0 > 0.0)) throw ConfigError("market.s0 must be > 0");
    return m;
}

CovParams cov_from(const Config& c) {
    c.require_section("cov");
    CovParams cov{c.get_double("cov", "alpha"), c.get_double("cov", "beta"), c.get_optional_double("cov", "domain_end")};
    if (!(cov.alpha > 0.0)) throw ConfigError("cov.alpha must be > 0");
    if (cov.beta < 0.0 && !cov.domain_end) throw ConfigError("cov.beta < 0 requires cov.domain_end");
    return cov;
}

SimOptions sim_from(unsigned threads) {
    SimOptions s;
    s.threads = threads;
    return s;
}

void write_text(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + file.string() + "'");
    out << text;
}

void write_json(const fs::path& file, const json& doc) { write_text(file, doc.dump(2) + "\n"); }

// Simulates the price ensemble described by [market], [surface], [engine].
PathEnsemble simulate_from(const Config& c, unsigned threads, bool force_risk_neutral) {
    const auto market = market_from(c);
    const auto surface = surface_from(c);
    const auto eng = engine_from(c);
    const std::string measure = force_risk_neutral ? "risk_neutral" : c.get_string("engine", "measure", "physical");
    DriftSpec drift = DriftSpec::constant_mu(0.0);
    if (measure == "risk_neutral") drift = DriftSpec::risk_neutral(market.r);
    else if (measure == "physical") drift = DriftSpec::constant_mu(c.get_double("engine", "mu", 0.0));
    else throw ConfigError("engine.measure must be physical or risk_neutral for price paths");
    return simulate_price(surface, drift, market.s0, eng.grid, eng.n_paths, derive_seed(eng.seed, "paths"),
                          sim_from(threads));
}

int cmd_simulate(const Config& c, const fs::path& out, unsigned threads) {
    const std::string kind = c.get_string("engine", "kind", "price");
    PathEnsemble ens = [&] {
        if (kind == "price") return simulate_from(c, threads, false);
        if (kind != "centered_log_return") throw ConfigError("engine.kind must be price or centered_log_return");
        const auto eng = engine_from(c);
        PriceAnchor anchor;
        if (c.has_section("market")) anchor.s0 = market_from(c).s0;
        return simulate_centered_returns(cov_from(c), surface_from(c), eng.grid, eng.n_paths,
                                         derive_seed(eng.seed, "paths"), sim_from(threads), anchor);
    }();
    std::ostringstream csv;
    write_ensemble_csv(csv, ens, c.resolved_preamble());
    write_text(out / "paths.csv", csv.str());
    std::printf("simulate: n_paths=%zu grid=[%g, %g] dt=%g n_steps=%zu seed=%llu -> %s\n", ens.n_paths(),
                ens.grid().t_start, ens.grid().t_end(), ens.grid().dt, ens.grid().n_steps,
                static_cast<unsigned long long>(c.get_u64("engine", "seed")), (out / "paths.csv").c_str());
    return kExitOk;
}

int cmd_qv(const Config& c, const fs::path& out, unsigned threads, bool fit) {
    c.require_section("qv");
    const auto windows = c.get_list("qv", "windows");
    const double start = c.get_double("qv", "window_start", 0.0);
    std::vector<QVReport> reports;
    const std::string input = c.get_string("qv", "input", "");
    if (!input.empty()) {
        std::ifstream in(input);
        if (!in) throw ConfigError("qv.input: cannot open '" + input + "'");
        const auto path = ingest_price_csv(in);
        for (double T : windows) reports.push_back(realized_qv(path, start, T));
    } else {
        const auto ens = simulate_from(c, threads, false);
        for (double T : windows)
            for (std::size_t i = 0; i < ens.n_paths(); ++i) reports.push_back(realized_qv(ens, i, start, T));
    }
    std::ostringstream csv;
    write_qv_reports_csv(csv, reports, c.resolved_preamble());
    write_text(out / "qv_reports.csv", csv.str());
    for (double T : windows) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : reports)
            if (r.T == T) {
                sum += r.time_avg;
                ++n;
            }
        std::printf("qv: T=%g mean QV/T=%.6g over %zu path(s)\n", T, sum / static_cast<double>(n), n);
    }
    if (fit) {
        // One report per window length: the ensemble mean of QV and QV/T.
        std::vector<QVReport> means;
        for (double T : windows) {
            QVReport m{start, T, 0.0, 0.0};
            double n = 0.0;
            for (const auto& r : reports)
                if (r.T == T) {
                    m.qv += r.qv;
                    n += 1.0;
                }
            m.qv /= n;
            m.time_avg = m.qv / T;
            means.push_back(m);
        }
        const auto f = fit_qv_params(means);
        json doc = {{"alpha_hat", f.alpha_hat},
                    {"theta_hat", f.theta_hat},
                    {"gamma_hat", f.gamma_hat ? json(*f.gamma_hat) : json(nullptr)},
                    {"residual_rms", f.residual_rms},
                    {"windows_used", f.windows_used},
                    {"config", c.resolved_text()}};
        write_json(out / "qv_fit.json", doc);
        std::printf("qv fit: alpha=%.6g theta=%.6g gamma=%s\n", f.alpha_hat, f.theta_hat,
                    f.gamma_hat ? std::to_string(*f.gamma_hat).c_str() : "n/a");
    }
    return kExitOk;
}

int cmd_price(const Config& c, const fs::path& out, unsigned threads) {
    c.require_section("price");
    const auto market = market_from(c);
    OptionSpec opt{option_kind_from_string(c.get_string("price", "kind")), c.get_double("price", "strike"),
                   c.get_double("price", "expiry")};
    opt.validate();
    const auto ens = simulate_from(c, threads, true);
    const auto est = mc_price(ens, opt, market.r);
    json doc = {{"option", {{"kind", to_string(opt.kind)}, {"strike", opt.strike}, {"expiry", opt.expiry}}},
                {"mean", est.mean},
                {"std_err", est.std_err},
                {"n_paths", est.n_paths}};
    if (opt.kind == OptionKind::Call || opt.kind == OptionKind::Put || opt.kind == OptionKind::Forward) {
        const auto parity = parity_audit(ens, opt.strike, opt.expiry, market.r);
        doc["audits"] = json::array(
            {{{"check", "pathwise_parity"}, {"margin", 1e-12 - parity.max_pathwise_residual}, {"pass", parity.pass}},
             {{"check", "martingale_3se"},
              {"margin", 3.0 * parity.martingale_std_err - std::abs(parity.martingale_gap)},
              {"pass", std::abs(parity.martingale_gap) <= 3.0 * parity.martingale_std_err}}});
    }
    const auto surface = surface_from(c);
    if (surface.family() == SurfaceFamily::Constant && (opt.kind == OptionKind::Call || opt.kind == OptionKind::Put))
        doc["black_scholes"] = bs_price(market.s0, opt.strike, market.r, std::sqrt(surface.alpha()), opt.expiry, opt.kind);
    doc["config"] = c.resolved_text();
    write_json(out / "price.json", doc);
    std::printf("price: %s K=%g T=%g mean=%.8g std_err=%.3g\n", to_string(opt.kind).c_str(), opt.strike, opt.expiry,
                est.mean, est.std_err);
    return kExitOk;
}

json audit_json(const SandwichReport& rep) {
    auto arr = json::array();
    for (const auto& l : rep.lines) arr.push_back({{"check", l.check}, {"margin", l.margin}, {"pass", l.pass}});
    return arr;
}

int cmd_ivsurface(const Config& c, const fs::path& out, unsigned threads) {
    c.require_section("ivsurface");
    const auto market = market_from(c);
    const auto surface = surface_from(c);
    c.require_section("engine");
    const auto strikes = c.get_list("ivsurface", "strikes");
    const auto expiries = c.get_list("ivsurface", "expiries");
    IvSurfaceOptions opt;
    opt.dt = c.get_double("engine", "dt");
    opt.sim = sim_from(threads);
    const auto seed = c.get_u64("engine", "seed");
    const auto n_paths = c.get_u64("engine", "n_paths");
    const auto points = implied_vol_surface(surface, market, strikes, expiries, n_paths, derive_seed(seed, "ivsurface"), opt);
    std::ostringstream csv;
    write_iv_surface_csv(csv, points, c.resolved_preamble());
    write_text(out / "iv_surface.csv", csv.str());
    const auto sandwich = envelope_sandwich_report(points, surface);
    json doc = {{"sandwich", audit_json(sandwich)}, {"sandwich_pass", sandwich.pass}};
    if (c.has("ivsurface", "theta")) {
        const QVParams qv{surface.alpha(), c.get_double("ivsurface", "theta"), c.get_double("ivsurface", "gamma", 1.0),
                          c.get_double("ivsurface", "T0", 1.0)};
        const auto flat = flattening_report(points, qv);
        doc["flattening"] = audit_json(flat);
        doc["flattening_pass"] = flat.pass;
    }
    doc["config"] = c.resolved_text();
    write_json(out / "iv_audit.json", doc);
    for (const auto& p : points)
        std::printf("ivsurface: T=%g K=%g iv2=%.6g (%s)\n", p.expiry_T, p.strike, p.iv2, p.flag.c_str());
    return kExitOk;
}

int cmd_cov(const Config& c, const fs::path& out, unsigned threads) {
    const auto cov = cov_from(c);
    const auto surface = surface_from(c);
    const auto eng = engine_from(c);
    const auto times = c.get_list("cov", "times");
    const double z = c.get_double("cov", "z", 0.0);
    PriceAnchor anchor;
    if (c.has_section("market")) anchor.s0 = market_from(c).s0;
    const auto ens = simulate_centered_returns(cov, surface, eng.grid, eng.n_paths, derive_seed(eng.seed, "paths"),
                                               sim_from(threads), anchor);
    const auto emp = empirical_covariance(ens, z, times);
    std::ostringstream csv;
    write_covariance_csv(csv, emp, c.resolved_preamble());
    write_text(out / "covariance.csv", csv.str());
    const auto fit = fit_cov_params(emp, cov.domain_end);
    json doc = {{"alpha_hat", fit.params.alpha},     {"alpha_std_err", fit.alpha_std_err},
                {"beta_hat", fit.params.beta},       {"beta_std_err", fit.beta_std_err},
                {"beta_raw", fit.beta_raw},          {"beta_clamped", fit.beta_clamped},
                {"residual_rms", fit.residual_rms},  {"n_entries", fit.n_entries},
                {"config", c.resolved_text()}};
    write_json(out / "cov_fit.json", doc);
    std::printf("cov: alpha_hat=%.6g +- %.2g beta_hat=%.6g +- %.2g%s\n", fit.params.alpha, fit.alpha_std_err,
                fit.params.beta, fit.beta_std_err, fit.beta_clamped ? " (clamped)" : "");
    return kExitOk;
}

struct ForecastSetup {
    ForecastDistribution dist;
    std::optional<PriceForecast> prices;
};

ForecastSetup forecast_from(const Config& c) {
    c.require_section("forecast");
    const double z = c.get_double("forecast", "z");
    const double T = c.get_double("forecast", "T");
    const auto times = c.get_list("forecast", "times");
    const std::string variant = c.get_string("forecast", "variant", "limit");
    const double m = c.get_double("forecast", "m", 0.0);
    const auto lambda0 = MeanLogReturn::constant_rate(m);
    std::optional<double> s0, s_z;
    double x = 0.0;
    if (c.has("forecast", "s_z")) {
        s0 = market_from(c).s0;
        s_z = c.get_double("forecast", "s_z");
        if (!(*s_z > 0.0)) throw ConfigError("forecast.s_z must be > 0");
        x = (std::log(*s_z / *s0) - lambda0.cumulative(z * T)) / std::sqrt(T);
    } else {
        x = c.get_double("forecast", "x");
    }
    ForecastSetup f;
    if (variant == "limit") {
        f.dist = limit_forecast(x, z, times, c.get_double("cov", "alpha"));
        f.dist.T = T;
    } else if (variant == "corrected") {
        f.dist = corrected_forecast(x, z, times, cov_from(c), T, c.get_double("forecast", "gamma"));
    } else {
        throw ConfigError("forecast.variant must be limit or corrected");
    }
    if (s_z) f.prices = lognormal_price_forecast(*s0, *s_z, lambda0, f.dist);
    return f;
}

json matrix_json(const Eigen::MatrixXd& m) {
    auto rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int cmd_forecast(const Config& c, const fs::path& out) {
    const auto f = forecast_from(c);
    json doc = {{"variant", to_string(f.dist.variant)},
                {"z", f.dist.z},
                {"x", f.dist.x},
                {"T", f.dist.T},
                {"times", f.dist.times},
                {"mean", vector_json(f.dist.mean)},
                {"cov", matrix_json(f.dist.cov)}};
    if (f.prices) {
        doc["mean_log_price"] = vector_json(f.prices->mean_log);
        doc["cov_log_price"] = matrix_json(f.prices->cov_log);
    }
    doc["config"] = c.resolved_text();
    write_json(out / "forecast.json", doc);
    for (std::size_t i = 0; i < f.dist.times.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        std::printf("forecast: t=%g psi=%.6g theta=%.6g\n", f.dist.times[i], f.dist.mean(k), f.dist.cov(k, k));
    }
    return kExitOk;
}

int cmd_pv(const Config& c, const fs::path& out, const fs::path& config_dir) {
    c.require_section("pv");
    const auto f = forecast_from(c);
    if (!f.prices) throw ConfigError("pv needs forecast.s_z to build the price forecast");
    const std::string file = c.get_string("pv", "portfolio");
    // Relative portfolio paths are tried as given, then next to the config.
    fs::path where(file);
    if (where.is_relative() && !fs::exists(where) && !config_dir.empty()) where = config_dir / where;
    std::ifstream in(where);
    if (!in) throw ConfigError("pv.portfolio: cannot open '" + file + "'");
    const auto portfolio = read_portfolio_csv(in);
    const auto market = market_from(c);
    const auto n = c.get_u64("pv", "n_samples");
    const auto seed = c.get_u64("engine", "seed");
    const auto rep = portfolio_pv(portfolio, *f.prices, market.r, n, derive_seed(seed, "pv"));
    json doc = {{"mean_pv", rep.mean_pv},
                {"var_pv", rep.var_pv},
                {"std_err", rep.std_err},
                {"n_samples", rep.n_samples},
                {"method", to_string(rep.method)}};
    if (rep.closed_form) {
        doc["closed_form"] = *rep.closed_form;
        doc["closed_form_pass"] = *rep.closed_form_pass;
    }
    doc["config"] = c.resolved_text();
    write_json(out / "pv.json", doc);
    std::printf("pv: mean=%.8g var=%.8g std_err=%.3g n=%zu\n", rep.mean_pv, rep.var_pv, rep.std_err, rep.n_samples);
    return kExitOk;
}

int cmd_verify(const Config& c, const fs::path& out, const std::string& suite, unsigned threads) {
    const std::string sel = suite.empty() ? "all" : suite;
    if (sel != "all" && std::find(suite_names().begin(), suite_names().end(), sel) == suite_names().end())
        throw ConfigError("unknown suite '" + sel + "'");
    VerifyOptions opt;
    opt.threads = threads;
    if (c.has("engine", "seed")) opt.seed = c.get_u64("engine", "seed");
    const auto results = run_verification(sel, opt);
    bool pass = true;
    for (const auto& r : results) {
        std::printf("%s\n", criterion_line(r).c_str());
        pass = pass && r.pass();
        for (const auto& [name, text] : r.artifacts) write_text(out / "verify" / r.suite / name, text);
    }
    write_json(out / "verify_report.json", verify_report_json(results));
    std::printf("verify: %s\n", pass ? "all checks pass" : "some checks FAIL");
    return pass ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qvlab: quadratic-variation, implied-volatility and covariance toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::string suite;
    bool fit = false;
    unsigned threads = 0;

    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "INI config or artifact with embedded config");
        if (needs_config) opt->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (0: QVLAB_THREADS or hardware)");
    };
    auto* sim = app.add_subcommand("simulate", "simulate an ensemble of paths");
    auto* qv = app.add_subcommand("qv", "realized quadratic variation over windows");
    auto* price = app.add_subcommand("price", "Monte Carlo price of one option");
    auto* iv = app.add_subcommand("ivsurface", "implied-volatility surface and envelope audit");
    auto* cov = app.add_subcommand("cov", "empirical covariance of centered returns and (alpha, beta) fit");
    auto* fc = app.add_subcommand("forecast", "conditional Gaussian forecast");
    auto* pv = app.add_subcommand("pv", "present value of a portfolio under a forecast");
    auto* ver = app.add_subcommand("verify", "run acceptance suites");
    for (auto* s : {sim, qv, price, iv, cov, fc, pv}) add_common(s, true);
    add_common(ver, false);
    qv->add_flag("--fit", fit, "fit (alpha, theta, gamma) from the windows");
    ver->add_option("--suite", suite, "suite name or 'all'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInvalid;
    }

    try {
        const Config cfg = load_config(config_path);
        const fs::path out(out_dir);
        if (sim->parsed()) return cmd_simulate(cfg, out, threads);
        if (qv->parsed()) return cmd_qv(cfg, out, threads, fit);
        if (price->parsed()) return cmd_price(cfg, out, threads);
        if (iv->parsed()) return cmd_ivsurface(cfg, out, threads);
        if (cov->parsed()) return cmd_cov(cfg, out, threads);
        if (fc->parsed()) return cmd_forecast(cfg, out);
        if (pv->parsed()) return cmd_pv(cfg, out, fs::path(config_path).parent_path());
        if (ver->parsed()) return cmd_verify(cfg, out, suite, threads);
    } catch (const qvlab::Error& e) {
        std::fprintf(stderr, "qvlab: %s\n", e.what());
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qvlab: %s\n", e.what());
        return kExitInvalid;
    }
    return kExitInvalid;
}
