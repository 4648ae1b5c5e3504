#include "qvlab/paths.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "qvlab/error.hpp"

namespace qvlab {

PathGrid::PathGrid(double t_start_, double dt_, std::size_t n_steps_)
    : t_start(t_start_), dt(dt_), n_steps(n_steps_) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("grid step dt must be > 0");
    if (n_steps == 0) throw DomainError("grid needs n_steps >= 1");
    if (!std::isfinite(t_start)) throw DomainError("grid start must be finite");
}

std::optional<std::size_t> PathGrid::node_of(double t) const noexcept {
    const double pos = (t - t_start) / dt;
    const double k = std::round(pos);
    if (k < 0.0 || k > static_cast<double>(n_steps)) return std::nullopt;
    if (std::abs(pos - k) > 1e-9 * std::max(1.0, k)) return std::nullopt;
    return static_cast<std::size_t>(k);
}

std::size_t PathGrid::require_node(double t, const char* what) const {
    if (auto k = node_of(t)) return *k;
    throw RangeError(std::string(what) + " t=" + format_g17(t) + " is not a node of the grid [" +
                     format_g17(t_start) + ", " + format_g17(t_end()) + "] step " +
                     format_g17(dt));
}

std::string to_string(PathKind kind) {
    return kind == PathKind::Price ? "price" : "centered_log_return";
}

std::string to_string(Measure measure) {
    switch (measure) {
        case Measure::Physical: return "physical";
        case Measure::RiskNeutral: return "risk_neutral";
        case Measure::Canonical: return "canonical";
    }
    return "unknown";
}

PathKind path_kind_from_string(const std::string& s) {
    if (s == "price") return PathKind::Price;
    if (s == "centered_log_return") return PathKind::CenteredLogReturn;
    throw ConfigError("unknown path kind '" + s + "'");
}

Measure measure_from_string(const std::string& s) {
    if (s == "physical") return Measure::Physical;
    if (s == "risk_neutral") return Measure::RiskNeutral;
    if (s == "canonical") return Measure::Canonical;
    throw ConfigError("unknown measure '" + s + "'");
}

PathEnsemble::PathEnsemble(PathGrid grid, std::size_t n_paths, PathKind kind, Measure measure,
                           std::uint64_t seed)
    : PathEnsemble(grid, n_paths, kind, measure, seed,
                   std::vector<double>(n_paths * grid.n_nodes(), 0.0)) {}

PathEnsemble::PathEnsemble(PathGrid grid, std::size_t n_paths, PathKind kind, Measure measure,
                           std::uint64_t seed, std::vector<double> values)
    : grid_(grid),
      n_paths_(n_paths),
      kind_(kind),
      measure_(measure),
      seed_(seed),
      values_(std::move(values)) {
    if (n_paths_ == 0) throw DomainError("ensemble needs n_paths >= 1");
    if (values_.size() != n_paths_ * grid_.n_nodes())
        throw ConfigError("ensemble value count does not match grid and path count");
}

PricePath to_price_path(const PathEnsemble& ensemble, std::size_t i) {
    if (ensemble.kind() != PathKind::Price) throw MisuseError("ensemble does not hold prices");
    if (i >= ensemble.n_paths()) throw RangeError("path index out of range");
    PricePath p;
    const auto& g = ensemble.grid();
    p.t.reserve(g.n_nodes());
    for (std::size_t k = 0; k < g.n_nodes(); ++k) p.t.push_back(g.time(k));
    const auto row = ensemble.path(i);
    p.price.assign(row.begin(), row.end());
    return p;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_ensemble_csv(std::ostream& out, const PathEnsemble& ensemble,
                        const std::string& preamble) {
    out << preamble;
    out << "# kind = " << to_string(ensemble.kind()) << '\n'
        << "# measure = " << to_string(ensemble.measure()) << '\n'
        << "# seed = " << ensemble.seed() << '\n';
    out << "path_id,t,value\n";
    const auto& g = ensemble.grid();
    std::string line;
    for (std::size_t i = 0; i < ensemble.n_paths(); ++i) {
        const auto row = ensemble.path(i);
        for (std::size_t k = 0; k < g.n_nodes(); ++k) {
            line.clear();
            line += std::to_string(i);
            line += ',';
            line += format_g17(g.time(k));
            line += ',';
            line += format_g17(row[k]);
            line += '\n';
            out << line;
        }
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, std::size_t line) {
    const std::string f = trim(field);
    double v = 0.0;
    const auto* first = f.data();
    const auto* last = f.data() + f.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (f.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError("malformed number '" + f + "'", line);
    return v;
}

}  // namespace

PathEnsemble read_ensemble_csv(std::istream& in) {
    std::map<std::string, std::string> meta;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<std::vector<double>> times;
    std::vector<std::vector<double>> values;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const auto eq = t.find('=');
            if (eq != std::string::npos) meta[trim(t.substr(1, eq - 1))] = trim(t.substr(eq + 1));
            continue;
        }
        if (!header_seen) {
            if (t != "path_id,t,value") throw ParseError("expected header 'path_id,t,value'", line_no);
            header_seen = true;
            continue;
        }
        std::stringstream ss(t);
        std::string a, b, c, extra;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
            std::getline(ss, extra, ','))
            throw ParseError("expected 3 fields", line_no);
        const double id_d = parse_double(a, line_no);
        if (id_d < 0 || id_d != std::floor(id_d)) throw ParseError("bad path_id", line_no);
        const auto id = static_cast<std::size_t>(id_d);
        if (id > values.size()) throw ParseError("path ids must be contiguous from 0", line_no);
        if (id == values.size()) {
            values.emplace_back();
            times.emplace_back();
        }
        times[id].push_back(parse_double(b, line_no));
        values[id].push_back(parse_double(c, line_no));
    }
    if (!header_seen) throw ParseError("missing header", line_no);
    if (values.empty() || times[0].size() < 2) throw ParseError("need at least 2 nodes", line_no);

    const auto& t0 = times[0];
    const double dt = (t0.back() - t0.front()) / static_cast<double>(t0.size() - 1);
    PathGrid grid(t0.front(), dt, t0.size() - 1);
    std::vector<double> flat;
    flat.reserve(values.size() * t0.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (times[i].size() != t0.size()) throw ParseError("paths have unequal lengths", line_no);
        for (std::size_t k = 0; k < t0.size(); ++k) {
            if (std::abs(times[i][k] - grid.time(k)) > 1e-9 * std::max(1.0, std::abs(grid.time(k))))
                throw ParseError("grid is not uniform or differs between paths", line_no);
        }
        flat.insert(flat.end(), values[i].begin(), values[i].end());
    }

    PathKind kind = PathKind::Price;
    Measure measure = Measure::Physical;
    std::uint64_t seed = 0;
    if (auto it = meta.find("kind"); it != meta.end()) kind = path_kind_from_string(it->second);
    if (auto it = meta.find("measure"); it != meta.end()) measure = measure_from_string(it->second);
    if (auto it = meta.find("seed"); it != meta.end()) seed = std::stoull(it->second);
    return PathEnsemble(grid, values.size(), kind, measure, seed, std::move(flat));
}

}  // namespace qvlab
