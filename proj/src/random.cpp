#include "blob/random.hpp"

namespace blob {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    // splitmix64 finalizer over (seed, stream)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Matrix Rng::gaussian(std::size_t rows, std::size_t cols)
{
    Matrix out(rows, cols);
    for (double& v : out.data())
        v = gaussian();
    return out;
}

Matrix Rng::uniform(std::size_t rows, std::size_t cols, double lo, double hi)
{
    Matrix out(rows, cols);
    for (double& v : out.data())
        v = uniform(lo, hi);
    return out;
}

Matrix Rng::rademacher(std::size_t rows, std::size_t cols)
{
    Matrix out(rows, cols);
    for (double& v : out.data())
        v = rademacher();
    return out;
}

} // namespace blob
