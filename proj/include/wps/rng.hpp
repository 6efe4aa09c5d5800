#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace wps {

// SplitMix64 finalizer; used to derive child seeds from (seed, index) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Reproducible random stream identified by (base_seed, stream_index).
// Distinct stream indices give independent streams. All draws are built
// directly on the engine's 64-bit output so sequences are identical across
// standard library implementations.
class RngStream {
public:
    RngStream(std::uint64_t base_seed, std::uint64_t stream_index);

    std::uint64_t base_seed() const noexcept { return base_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    bool bernoulli(double p) { return uniform() < p; }
    // Uniform on {0, ..., n-1}, unbiased. n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    template <class T>
    void shuffle(std::span<T> v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }
    template <class T>
    void shuffle(std::vector<T>& v) { shuffle(std::span<T>(v)); }

private:
    std::uint64_t base_seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 engine_;
};

// Walker alias table for O(1) draws from a discrete distribution.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> weights);
    std::size_t draw(RngStream& rng) const;
    std::size_t size() const noexcept { return prob_.size(); }

private:
    std::vector<double> prob_;
    std::vector<std::size_t> alias_;
};

} // namespace wps
