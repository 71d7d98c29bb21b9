#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace treetune {

/// Seeded generator with draw helpers whose output is fully specified, so the
/// same seed gives the same numbers on every platform and standard library.
/// std::mt19937_64 is bit-exact by the standard; the std distributions are not,
/// which is why the helpers below are written out.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (seed, a, b), e.g. (forest seed, tree index).
    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform on (0, 1].
    double uniform_open_closed() { return 1.0 - uniform(); }
    /// Uniform integer on [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform integer on [lo, hi] inclusive.
    std::int64_t integer(std::int64_t lo, std::int64_t hi);
    bool coin() { return (engine_() >> 63) != 0; }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

    /// m distinct indices from [0, n) in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive child seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace treetune
