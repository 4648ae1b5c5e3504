#include "qvlab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qvlab/error.hpp"
#include "qvlab/paths.hpp"

namespace qvlab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string dotted(const std::string& section, const std::string& key) { return section + "." + key; }

double to_double(const std::string& text, const std::string& name) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError(name + ": expected a number, got '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v))
        throw ConfigError(name + ": expected a number, got '" + text + "'");
    return v;
}

}  // namespace

Config Config::parse(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    bool embedded = false;
    while (std::getline(in, line)) {
        if (lines.empty() && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (line.rfind("#cfg", 0) == 0) embedded = true;
        lines.push_back(line);
    }
    Config cfg;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw_line : lines) {
        ++line_no;
        std::string t;
        if (embedded) {
            if (raw_line.rfind("#cfg", 0) != 0) continue;
            t = trim(raw_line.substr(4));
        } else {
            t = trim(raw_line);
        }
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError("unterminated section header", line_no);
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ParseError("empty section name", line_no);
            cfg.values_[section];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        if (section.empty()) throw ParseError("key outside of any [section]", line_no);
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        const auto hash = value.find(" #");
        if (hash != std::string::npos) value = trim(value.substr(0, hash));
        if (key.empty()) throw ParseError("empty key", line_no);
        cfg.values_[section][key] = value;
    }
    return cfg;
}

Config Config::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in);
}

bool Config::has_section(const std::string& section) const { return values_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section);
    return it != values_.end() && it->second.count(key) > 0;
}

void Config::require_section(const std::string& section) const {
    if (!has_section(section)) throw ConfigError("missing section [" + section + "]");
}

const std::string& Config::raw(const std::string& section, const std::string& key) const {
    const auto it = values_.find(section);
    if (it == values_.end()) throw ConfigError("missing key " + dotted(section, key) + " (no [" + section + "] section)");
    const auto kt = it->second.find(key);
    if (kt == it->second.end()) throw ConfigError("missing key " + dotted(section, key));
    return kt->second;
}

void Config::record(const std::string& section, const std::string& key, const std::string& value) const {
    resolved_[section][key] = value;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const auto& v = raw(section, key);
    record(section, key, v);
    return v;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    if (has(section, key)) return get_string(section, key);
    record(section, key, fallback);
    return fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    const auto& v = raw(section, key);
    const double d = to_double(v, dotted(section, key));
    record(section, key, v);
    return d;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
    if (has(section, key)) return get_double(section, key);
    record(section, key, format_g17(fallback));
    return fallback;
}

std::optional<double> Config::get_optional_double(const std::string& section, const std::string& key) const {
    if (!has(section, key)) return std::nullopt;
    return get_double(section, key);
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key) const {
    const auto& v = raw(section, key);
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
        n = std::stoull(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(dotted(section, key) + ": expected a non-negative integer, got '" + v + "'");
    }
    if (used != v.size())
        throw ConfigError(dotted(section, key) + ": expected a non-negative integer, got '" + v + "'");
    record(section, key, v);
    return n;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
    if (has(section, key)) return get_u64(section, key);
    record(section, key, std::to_string(fallback));
    return fallback;
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key) const {
    const auto& v = raw(section, key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), dotted(section, key)));
    if (out.empty()) throw ConfigError(dotted(section, key) + ": empty list");
    record(section, key, v);
    return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    values_[section][key] = value;
}

std::string Config::resolved_text() const {
    std::ostringstream out;
    for (const auto& [section, keys] : resolved_) {
        out << '[' << section << "]\n";
        for (const auto& [k, v] : keys) out << k << " = " << v << '\n';
    }
    return out.str();
}

std::string Config::resolved_preamble() const {
    std::istringstream in(resolved_text());
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) out << "#cfg " << line << '\n';
    return out.str();
}

}  // namespace qvlab
