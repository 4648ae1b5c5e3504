#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qvlab {

/// INI-style run configuration: `[section]` headers and `key = value` lines,
/// `#` or `;` comments. Artifacts embed their resolved config as lines
/// prefixed with `#cfg `; when such lines are present only they are read, so
/// an artifact can be passed back as a config.
///
/// Every value read through a getter (explicit or defaulted) is recorded in
/// the resolved view, which is what artifacts embed.
class Config {
public:
    static Config parse(std::istream& in);
    static Config parse_string(const std::string& text);
    static Config load(const std::string& path);

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;
    /// ConfigError naming `section.key` when the section or key is missing.
    void require_section(const std::string& section) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::optional<double> get_optional_double(const std::string& section,
                                              const std::string& key) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    /// Comma-separated numbers.
    std::vector<double> get_list(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    /// Canonical INI text of the resolved values.
    std::string resolved_text() const;
    /// Resolved text with each line prefixed by `#cfg `.
    std::string resolved_preamble() const;

private:
    using Table = std::map<std::string, std::map<std::string, std::string>>;
    const std::string& raw(const std::string& section, const std::string& key) const;
    void record(const std::string& section, const std::string& key, const std::string& value) const;

    Table values_;
    mutable Table resolved_;
};

}  // namespace qvlab
