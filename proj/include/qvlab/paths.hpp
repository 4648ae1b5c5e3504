#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qvlab {

/// Uniform time grid t_start + k*dt, k = 0..n_steps.
struct PathGrid {
    double t_start = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;

    PathGrid() = default;
    PathGrid(double t_start, double dt, std::size_t n_steps);

    std::size_t n_nodes() const noexcept { return n_steps + 1; }
    double time(std::size_t k) const noexcept { return t_start + static_cast<double>(k) * dt; }
    double t_end() const noexcept { return time(n_steps); }

    /// Node index for time t, if t lies on the grid (relative tolerance 1e-9 of dt).
    std::optional<std::size_t> node_of(double t) const noexcept;
    /// Same as node_of but throws RangeError naming `what` when off-grid.
    std::size_t require_node(double t, const char* what) const;
};

enum class PathKind { Price, CenteredLogReturn };
enum class Measure { Physical, RiskNeutral, Canonical };

std::string to_string(PathKind kind);
std::string to_string(Measure measure);
PathKind path_kind_from_string(const std::string& s);
Measure measure_from_string(const std::string& s);

/// A set of trajectories on a common grid, stored row-major (path, node).
class PathEnsemble {
public:
    PathEnsemble(PathGrid grid, std::size_t n_paths, PathKind kind, Measure measure,
                 std::uint64_t seed);
    PathEnsemble(PathGrid grid, std::size_t n_paths, PathKind kind, Measure measure,
                 std::uint64_t seed, std::vector<double> values);

    const PathGrid& grid() const noexcept { return grid_; }
    std::size_t n_paths() const noexcept { return n_paths_; }
    PathKind kind() const noexcept { return kind_; }
    Measure measure() const noexcept { return measure_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<const double> path(std::size_t i) const noexcept {
        return {values_.data() + i * grid_.n_nodes(), grid_.n_nodes()};
    }
    std::span<double> path(std::size_t i) noexcept {
        return {values_.data() + i * grid_.n_nodes(), grid_.n_nodes()};
    }
    double at(std::size_t i, std::size_t k) const noexcept {
        return values_[i * grid_.n_nodes() + k];
    }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    PathGrid grid_;
    std::size_t n_paths_;
    PathKind kind_;
    Measure measure_;
    std::uint64_t seed_;
    std::vector<double> values_;
};

/// A single price trajectory on a possibly non-uniform grid.
struct PricePath {
    std::vector<double> t;
    std::vector<double> price;

    std::size_t size() const noexcept { return t.size(); }
};

/// Member i of a Price ensemble as a standalone path.
PricePath to_price_path(const PathEnsemble& ensemble, std::size_t i);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_g17(double v);

/// CSV `path_id,t,value`, one row per node. Optional `#` preamble lines are
/// written verbatim before the metadata comments and the header.
void write_ensemble_csv(std::ostream& out, const PathEnsemble& ensemble,
                        const std::string& preamble = {});

/// Reads the schema written by write_ensemble_csv. Lines starting with `#`
/// are comments; `# kind = ...`, `# measure = ...`, `# seed = ...` are honoured.
/// The grid must be uniform and shared by every path.
PathEnsemble read_ensemble_csv(std::istream& in);

}  // namespace qvlab
