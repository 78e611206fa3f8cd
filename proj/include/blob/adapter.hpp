#pragma once

#include <iosfwd>

#include "blob/matrix.hpp"
#include "blob/param_map.hpp"
#include "blob/random.hpp"

namespace blob {

// Low-rank adapter W = W0 + B A with a factorized Gaussian over A:
// A_ij ~ N(M_ij, Omega_ij^2), Omega = map(G) (G∘G for the square map).
// B is deterministic. Shapes: W0 m×n, B m×r, M and G r×n, r < min(m, n).
struct VariationalAdapter {
    Matrix w0;
    Matrix b;
    Matrix mean_a;
    Matrix g;
    ParamMap std_map = ParamMap::square;

    VariationalAdapter() = default;
    VariationalAdapter(Matrix w0, Matrix b, Matrix mean_a, Matrix g,
                       ParamMap std_map = ParamMap::square);

    std::size_t m() const noexcept { return w0.rows(); }
    std::size_t n() const noexcept { return w0.cols(); }
    std::size_t rank() const noexcept { return mean_a.rows(); }

    // Recomputed on every call; never cached.
    Matrix omega() const;

    // Throws DimensionError on inconsistent shapes or r >= min(m, n).
    void validate() const;

    friend bool operator==(const VariationalAdapter&, const VariationalAdapter&) = default;
};

// Per-call flipout randomness: S in {±1}^{n×b}, T in {±1}^{b×r}, E ~ N(0, I) r×n.
struct FlipoutMasks {
    Matrix s;
    Matrix t;
    Matrix e;

    static FlipoutMasks sample(Rng& rng, std::size_t n, std::size_t batch, std::size_t rank);
    // S = T = 1, i.e. every example shares the single draw E.
    static FlipoutMasks shared(Matrix e, std::size_t batch);
};

// [(E∘Omega)(H∘S)]∘T^T, the r×b per-example perturbation of A·H.
Matrix flipout_perturbation(const Matrix& noise_omega, const Matrix& h, const Matrix& s,
                            const Matrix& t);

// W0 H + B M H.
Matrix forward_mean(const VariationalAdapter& adapter, const Matrix& h);

// M + Omega∘noise.
Matrix sample_a(const VariationalAdapter& adapter, const Matrix& noise);

// W0 H + B (M H + [(E∘Omega)(H∘S)]∘T^T).
Matrix forward_flipout(const VariationalAdapter& adapter, const Matrix& h,
                       const FlipoutMasks& masks);

// W0 H + B (M + Omega∘noise) H: one sampled A shared by the whole batch.
Matrix forward_naive_shared(const VariationalAdapter& adapter, const Matrix& h,
                            const Matrix& noise);

// Text record with a magic/version header. Values are written as hex floats,
// so a write/read round trip is bit-exact.
void write_adapter(std::ostream& out, const VariationalAdapter& adapter);
VariationalAdapter read_adapter(std::istream& in);

void write_matrix(std::ostream& out, const char* name, const Matrix& a);
Matrix read_matrix(std::istream& in, const char* name);

} // namespace blob
