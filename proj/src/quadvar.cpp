#include "qvlab/quadvar.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "qvlab/error.hpp"

namespace qvlab {

void QVParams::validate() const {
    const auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!pos(alpha)) throw ParameterError("qv alpha must be > 0");
    if (!pos(theta)) throw ParameterError("qv theta must be > 0");
    if (!pos(gamma)) throw ParameterError("qv gamma must be > 0");
    if (!pos(T0)) throw ParameterError("qv T0 must be > 0");
}

namespace {

std::size_t find_node(const std::vector<double>& t, double target) {
    const double tol = 1e-9 * std::max(1.0, std::abs(target));
    auto it = std::lower_bound(t.begin(), t.end(), target - tol);
    if (it == t.end() || std::abs(*it - target) > tol)
        throw RangeError("window end t=" + format_g17(target) + " is not a node inside the path grid");
    return static_cast<std::size_t>(it - t.begin());
}

double sum_sq_log_increments(std::span<const double> prices, std::size_t k0, std::size_t k1,
                             std::size_t stride = 1) {
    double qv = 0.0;
    for (std::size_t k = k0; k + stride <= k1; k += stride) {
        const double d = std::log(prices[k + stride] / prices[k]);
        qv += d * d;
    }
    return qv;
}

}  // namespace

QVReport realized_qv(const PricePath& path, double t, double T) {
    if (path.t.size() != path.price.size()) throw ConfigError("price path has mismatched arrays");
    if (!(T > 0.0)) throw RangeError("window length T must be > 0");
    const std::size_t k0 = find_node(path.t, t);
    const std::size_t k1 = find_node(path.t, t + T);
    if (k1 <= k0) throw RangeError("window must contain at least 2 nodes");
    const double qv = sum_sq_log_increments(path.price, k0, k1);
    return {t, T, qv, qv / T};
}

QVReport realized_qv(const PathEnsemble& ensemble, std::size_t i, double t, double T) {
    if (ensemble.kind() != PathKind::Price) throw MisuseError("QV needs a price ensemble");
    if (i >= ensemble.n_paths()) throw RangeError("path index out of range");
    if (!(T > 0.0)) throw RangeError("window length T must be > 0");
    const auto& g = ensemble.grid();
    const std::size_t k0 = g.require_node(t, "window start");
    const std::size_t k1 = g.require_node(t + T, "window end");
    if (k1 <= k0) throw RangeError("window must contain at least 2 nodes");
    const double qv = sum_sq_log_increments(ensemble.path(i), k0, k1);
    return {t, T, qv, qv / T};
}

double qv_refinement_gap(const PricePath& path, double t, double T) {
    const std::size_t k0 = find_node(path.t, t);
    const std::size_t k1 = find_node(path.t, t + T);
    if (k1 <= k0 || (k1 - k0) % 2 != 0)
        throw RangeError("refinement diagnostic needs an even number of increments");
    return sum_sq_log_increments(path.price, k0, k1) - sum_sq_log_increments(path.price, k0, k1, 2);
}

std::vector<BoundCheck> check_bound(std::span<const QVReport> reports, const QVParams& params) {
    params.validate();
    std::vector<BoundCheck> out;
    out.reserve(reports.size());
    for (const auto& r : reports) {
        const double dev = std::abs(r.time_avg - params.alpha);
        const double bound = params.theta / std::pow(r.T, params.gamma);
        BoundStatus status = BoundStatus::SkippedBelowOnset;
        if (r.T >= params.T0) status = dev <= bound ? BoundStatus::Pass : BoundStatus::Fail;
        out.push_back({r, status, dev, bound});
    }
    return out;
}

namespace {

struct LogLogFit {
    bool available = false;
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
    std::size_t used = 0;
};

LogLogFit regress(std::span<const QVReport> reports, double alpha) {
    const double floor = 1e-12 * std::abs(alpha);
    std::vector<double> xs, ys;
    for (const auto& r : reports) {
        const double dev = std::abs(r.time_avg - alpha);
        if (dev <= floor) continue;
        xs.push_back(std::log(r.T));
        ys.push_back(std::log(dev));
    }
    LogLogFit fit;
    fit.used = xs.size();
    if (xs.size() < 2) return fit;
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) return fit;
    fit.available = true;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss += e * e;
    }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

}  // namespace

QVFit fit_qv_params(std::span<const QVReport> reports) {
    if (reports.size() < 4) throw InsufficientDataError("fit needs at least 4 windows");
    std::set<double> lengths;
    for (const auto& r : reports) {
        if (!(r.T > 0.0)) throw InsufficientDataError("window with non-positive length");
        lengths.insert(r.T);
    }
    if (lengths.size() < 4) throw InsufficientDataError("fit needs at least 4 distinct window lengths");
    if (*lengths.rbegin() < 10.0 * *lengths.begin())
        throw InsufficientDataError("window lengths must span at least one decade");

    std::vector<QVReport> sorted(reports.begin(), reports.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const QVReport& a, const QVReport& b) { return a.T > b.T; });
    const std::size_t q = std::max<std::size_t>(2, (sorted.size() + 3) / 4);
    double wsum = 0.0, num = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < q; ++i) {
        wsum += sorted[i].T;
        num += sorted[i].T * sorted[i].time_avg;
        lo = std::min(lo, sorted[i].time_avg);
        hi = std::max(hi, sorted[i].time_avg);
    }
    double alpha = num / wsum;

    // Profile refinement of alpha over a bracket set by the quartile spread.
    const double half = 2.0 * std::max(hi - lo, std::max(hi - alpha, alpha - lo));
    const auto objective = [&](double a) {
        const auto f = regress(reports, a);
        return (f.available && f.used >= 3) ? f.rms : std::numeric_limits<double>::infinity();
    };
    if (half > 0.0 && std::isfinite(objective(alpha))) {
        constexpr int kScan = 2000;
        double best_a = alpha;
        double best_v = objective(alpha);
        const double step = 2.0 * half / kScan;
        for (int j = 0; j <= kScan; ++j) {
            const double a = alpha - half + j * step;
            if (!(a > 0.0)) continue;
            const double v = objective(a);
            if (v < best_v) {
                best_v = v;
                best_a = a;
            }
        }
        // golden section inside the best cell
        double left = std::max(best_a - step, std::numeric_limits<double>::min());
        double right = best_a + step;
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = right - ratio * (right - left);
        double d = left + ratio * (right - left);
        double fc = objective(c), fd = objective(d);
        for (int it = 0; it < 200 && (right - left) > 1e-15 * std::abs(best_a); ++it) {
            if (fc < fd) {
                right = d;
                d = c;
                fd = fc;
                c = right - ratio * (right - left);
                fc = objective(c);
            } else {
                left = c;
                c = d;
                fc = fd;
                d = left + ratio * (right - left);
                fd = objective(d);
            }
        }
        const double golden = 0.5 * (left + right);
        const double gv = objective(golden);
        if (gv < best_v) {
            best_v = gv;
            best_a = golden;
        }
        alpha = best_a;
    }

    QVFit out{};
    out.alpha_hat = alpha;
    const auto f = regress(reports, alpha);
    out.windows_used = f.used;
    if (f.available) {
        out.gamma_hat = -f.slope;
        out.theta_hat = std::exp(f.intercept);
        out.residual_rms = f.rms;
    } else {
        out.theta_hat = 0.0;
        out.residual_rms = 0.0;
    }
    if (!(out.alpha_hat > 0.0)) throw InsufficientDataError("fit produced a non-positive alpha");
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_field(const std::string& raw, std::size_t line) {
    const std::string f = trim(raw);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw ParseError("malformed number '" + f + "'", line);
    return v;
}

}  // namespace

PricePath ingest_price_csv(std::istream& in) {
    PricePath path;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
            line.erase(0, 3);
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header) {
            if (t != "t,price") throw ParseError("expected header 't,price'", line_no);
            header = true;
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
            throw ParseError("expected 2 fields", line_no);
        const double time = parse_field(t.substr(0, comma), line_no);
        const double price = parse_field(t.substr(comma + 1), line_no);
        if (!(price > 0.0)) throw ParseError("price must be > 0", line_no);
        if (!path.t.empty() && !(time > path.t.back()))
            throw ParseError("times must be strictly increasing", line_no);
        path.t.push_back(time);
        path.price.push_back(price);
    }
    if (!header) throw ParseError("missing header 't,price'", line_no);
    if (path.t.empty()) throw ParseError("no data rows", line_no);
    return path;
}

void write_qv_reports_csv(std::ostream& out, std::span<const QVReport> reports,
                          const std::string& preamble) {
    out << preamble << "window_start,T,qv,time_avg\n";
    for (const auto& r : reports)
        out << format_g17(r.window_start) << ',' << format_g17(r.T) << ',' << format_g17(r.qv) << ','
            << format_g17(r.time_avg) << '\n';
}

}  // namespace qvlab
