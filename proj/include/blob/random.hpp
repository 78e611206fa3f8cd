#pragma once

#include <cstdint>
#include <random>

#include "blob/matrix.hpp"

namespace blob {

// Mixes a base seed with a stream tag so that independent consumers
// (initialization, shuffling, weight noise, dropout) never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Seeded sampler. Not thread-safe; give each thread its own.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double gaussian() { return normal_(engine_); }
    double uniform(double lo, double hi)
    {
        return lo + (hi - lo) * unit_(engine_);
    }
    double rademacher() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }
    std::uint64_t next_u64() { return engine_(); }

    Matrix gaussian(std::size_t rows, std::size_t cols);
    Matrix uniform(std::size_t rows, std::size_t cols, double lo, double hi);
    Matrix rademacher(std::size_t rows, std::size_t cols);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

} // namespace blob
