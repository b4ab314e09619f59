#pragma once

#include <cstdint>
#include <optional>

namespace assortinf {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent child seed for stream `stream` of `master`.
/// Replication r of an experiment runs on split_seed(master_seed, r).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// Counter-based 64-bit generator: draw i is mix64(key + i * gamma), so the
/// output sequence is a pure function of (key, i). Normal variates use the
/// Box-Muller transform with both outputs consumed in order. This pairing is
/// pinned so bootstrap quantiles are reproducible bit-for-bit from a seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal.
    double normal();
    /// Uniform integer in [0, bound), bound > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Child generator for a named stream; independent of draws made so far.
    Rng split(std::uint64_t stream) const;

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    struct FromKey {};
    Rng(FromKey, std::uint64_t key) : key_(key) {}

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    std::optional<double> spare_normal_;
};

}  // namespace assortinf
