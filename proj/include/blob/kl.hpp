#pragma once

#include <cstdint>

#include "blob/adapter.hpp"
#include "blob/matrix.hpp"

namespace blob {

// Isotropic zero-mean Gaussian prior over each entry of A.
struct PriorSpec {
    double sigma_p = 0.2;

    explicit PriorSpec(double sigma_p_ = 0.2);
};

// Gaussian over vec(W), possibly with a singular covariance.
struct FullWeightGaussian {
    Matrix mu;   // (mn)×1
    Matrix cov;  // (mn)×(mn)
};

// Largest m*n for which full-weight objects are materialized.
inline constexpr std::size_t kFullWeightLimit = 4096;

// KL[N(M, Omega^2) || N(0, sigma_p^2)] summed over entries, for an explicit
// standard-deviation matrix. Throws std::domain_error if any Omega_ij <= 0.
double kl_diag_gaussian(const Matrix& mean, const Matrix& omega, const PriorSpec& prior);

// Exact KL[q(A) || P(A)] with Omega = G∘G, constants included, so the result is
// zero iff q == P. Throws std::domain_error if any G entry is exactly zero.
double kl_closed_form(const Matrix& mean_a, const Matrix& g, const PriorSpec& prior);

// The same divergence with the additive constant rn*log(sigma_p) - rn/2 dropped:
// (||M||^2 + ||Omega||^2) / (2 sigma_p^2) - sum log Omega.
double kl_closed_form_raw(const Matrix& mean_a, const Matrix& g, const PriorSpec& prior);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

// Sample mean of log q(A) - log P(A) over A ~ q. Requires samples >= 1000.
MonteCarloEstimate kl_monte_carlo(const Matrix& mean_a, const Matrix& g, const PriorSpec& prior,
                                  std::size_t samples, std::uint64_t seed);

// mu_q = vec(W0 + B M), Sigma_q = (I_n ⊗ B) diag(vec(Omega)^2) (I_n ⊗ B^T),
// assembled block by block.
FullWeightGaussian build_full_posterior(const VariationalAdapter& adapter);

// mu_p = vec(W0), Sigma_p = sigma_p^2 (I_n ⊗ R R^T). `factor` is R (m×k);
// the canonical choice is R = B.
FullWeightGaussian build_full_prior(const Matrix& w0, const Matrix& factor, const PriorSpec& prior);

// KL[N(mu_q, Sigma_q + lambda I) || N(mu_p, Sigma_p + lambda I)].
double kl_full_weight_regularized(const FullWeightGaussian& q, const FullWeightGaussian& p,
                                  double lambda);

} // namespace blob
