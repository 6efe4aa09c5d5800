#include "wps/rng.hpp"

#include <stdexcept>

namespace wps {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t base_seed, std::uint64_t stream_index)
{
    // seed_seq's mixing algorithm is fixed by the standard.
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32),
                      0x77707321u};
    return std::mt19937_64(seq);
}

} // namespace

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_index)
    : base_seed_(base_seed), stream_index_(stream_index), engine_(make_engine(base_seed, stream_index))
{
}

double RngStream::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n)
{
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    // Lemire's nearly-divisionless rejection.
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = engine_();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

AliasTable::AliasTable(std::span<const double> weights) : prob_(weights.size()), alias_(weights.size())
{
    const std::size_t n = weights.size();
    if (n == 0) throw std::invalid_argument("alias table: no weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("alias table: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("alias table: weights sum to zero");

    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = weights[i] * static_cast<double>(n) / total;
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (std::size_t i : large) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
    for (std::size_t i : small) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
}

std::size_t AliasTable::draw(RngStream& rng) const
{
    const auto column = static_cast<std::size_t>(rng.uniform_index(prob_.size()));
    return rng.uniform() < prob_[column] ? column : alias_[column];
}

} // namespace wps
