#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace qvlab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The output is a pure function of (key, counter), which is what makes
/// per-path substreams independent of how paths are split across workers.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept;
};

/// splitmix64 finaliser; used to decorrelate user seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a labelled child seed, e.g. derive_seed(seed, "ivsurface").
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

/// Stream of standard normal variates for one (seed, substream) pair.
///
/// Draw n of substream i is identical no matter which thread produces it or
/// in what order the substreams are visited.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t substream) noexcept;

    double next() noexcept;
    double next_uniform() noexcept;

    /// Index of the next 128-bit block to be consumed.
    std::uint64_t position() const noexcept { return block_; }

private:
    void refill() noexcept;

    Philox4x32::Key key_{};
    std::uint64_t substream_;
    std::uint64_t block_ = 0;
    std::array<double, 2> cached_{};
    int available_ = 0;
};

}  // namespace qvlab
