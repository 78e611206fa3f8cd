#include "blob/kl.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "blob/random.hpp"

namespace blob {

namespace {

void require_dims(const Matrix& mean_a, const Matrix& other, const char* op)
{
    if (!mean_a.same_shape(other))
        throw DimensionError(std::string(op) + ": mean " + shape_string(mean_a) + " vs " +
                             shape_string(other));
}

void require_nonzero_g(const Matrix& g, const char* op)
{
    for (double v : g.data())
        if (v == 0.0)
            throw std::domain_error(std::string(op) +
                                    ": G has a zero entry (degenerate posterior, infinite KL)");
}

void require_size_guard(std::size_t m, std::size_t n, const char* op)
{
    if (m * n > kFullWeightLimit)
        throw DimensionError(std::string(op) + ": m*n = " + std::to_string(m * n) +
                             " exceeds the materialization limit " +
                             std::to_string(kFullWeightLimit));
}

} // namespace

PriorSpec::PriorSpec(double sigma_p_) : sigma_p(sigma_p_)
{
    if (!(sigma_p > 0.0) || !std::isfinite(sigma_p))
        throw std::invalid_argument("PriorSpec: sigma_p must be positive and finite");
}

double kl_diag_gaussian(const Matrix& mean, const Matrix& omega, const PriorSpec& prior)
{
    require_dims(mean, omega, "kl_diag_gaussian");
    const double var_p = prior.sigma_p * prior.sigma_p;
    const double log_sp = std::log(prior.sigma_p);
    double kl = 0.0;
    auto mu = mean.data();
    auto om = omega.data();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (!(om[k] > 0.0))
            throw std::domain_error("kl_diag_gaussian: non-positive standard deviation");
        kl += log_sp - std::log(om[k]) + (om[k] * om[k] + mu[k] * mu[k]) / (2.0 * var_p) - 0.5;
    }
    return kl;
}

double kl_closed_form(const Matrix& mean_a, const Matrix& g, const PriorSpec& prior)
{
    require_dims(mean_a, g, "kl_closed_form");
    require_nonzero_g(g, "kl_closed_form");
    return kl_diag_gaussian(mean_a, hadamard(g, g), prior);
}

double kl_closed_form_raw(const Matrix& mean_a, const Matrix& g, const PriorSpec& prior)
{
    require_dims(mean_a, g, "kl_closed_form_raw");
    require_nonzero_g(g, "kl_closed_form_raw");
    const double var_p = prior.sigma_p * prior.sigma_p;
    double quad = 0.0;
    double logs = 0.0;
    auto mu = mean_a.data();
    auto gg = g.data();
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double omega = gg[k] * gg[k];
        quad += mu[k] * mu[k] + omega * omega;
        logs += std::log(omega);
    }
    return quad / (2.0 * var_p) - logs;
}

MonteCarloEstimate kl_monte_carlo(const Matrix& mean_a, const Matrix& g, const PriorSpec& prior,
                                  std::size_t samples, std::uint64_t seed)
{
    require_dims(mean_a, g, "kl_monte_carlo");
    require_nonzero_g(g, "kl_monte_carlo");
    if (samples < 1000)
        throw std::invalid_argument("kl_monte_carlo: need at least 1000 samples");

    const std::size_t d = mean_a.size();
    std::vector<double> omega(d);
    std::vector<double> log_omega(d);
    for (std::size_t k = 0; k < d; ++k) {
        omega[k] = g.data()[k] * g.data()[k];
        log_omega[k] = std::log(omega[k]);
    }
    const double var_p = prior.sigma_p * prior.sigma_p;
    const double log_sp = std::log(prior.sigma_p);

    Rng rng(seed);
    // Welford running moments of the per-sample log-ratio.
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        double log_ratio = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double eps = rng.gaussian();
            const double a = mean_a.data()[k] + omega[k] * eps;
            // log N(a | M, Omega^2) - log N(a | 0, sigma_p^2); the 2*pi terms cancel.
            log_ratio += (log_sp - log_omega[k]) - 0.5 * eps * eps + 0.5 * a * a / var_p;
        }
        const double delta = log_ratio - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (log_ratio - mean);
    }
    const double n = static_cast<double>(samples);
    return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

FullWeightGaussian build_full_posterior(const VariationalAdapter& adapter)
{
    adapter.validate();
    const std::size_t m = adapter.m();
    const std::size_t n = adapter.n();
    const std::size_t r = adapter.rank();
    require_size_guard(m, n, "build_full_posterior");

    FullWeightGaussian q;
    q.mu = vec(add(adapter.w0, matmul(adapter.b, adapter.mean_a)));
    q.cov = Matrix(m * n, m * n);
    const Matrix omega = adapter.omega();
    // Block j (rows/cols j*m .. j*m+m-1) is B diag(Omega(:, j)^2) B^T.
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < m; ++k) {
                double s = 0.0;
                for (std::size_t l = 0; l < r; ++l) {
                    const double var = omega(l, j) * omega(l, j);
                    s += adapter.b(i, l) * var * adapter.b(k, l);
                }
                q.cov(j * m + i, j * m + k) = s;
            }
    return q;
}

FullWeightGaussian build_full_prior(const Matrix& w0, const Matrix& factor, const PriorSpec& prior)
{
    const std::size_t m = w0.rows();
    const std::size_t n = w0.cols();
    if (factor.rows() != m)
        throw DimensionError("build_full_prior: factor is " + shape_string(factor) +
                             ", expected " + std::to_string(m) + " rows");
    require_size_guard(m, n, "build_full_prior");

    FullWeightGaussian p;
    p.mu = vec(w0);
    const Matrix block = scale(matmul(factor, transpose(factor)), prior.sigma_p * prior.sigma_p);
    p.cov = Matrix(m * n, m * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < m; ++k)
                p.cov(j * m + i, j * m + k) = block(i, k);
    return p;
}

double kl_full_weight_regularized(const FullWeightGaussian& q, const FullWeightGaussian& p,
                                  double lambda)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("kl_full_weight_regularized: lambda must be positive");
    const std::size_t d = q.mu.rows();
    if (q.mu.cols() != 1 || !p.mu.same_shape(q.mu) || q.cov.rows() != d || q.cov.cols() != d ||
        !p.cov.same_shape(q.cov))
        throw DimensionError("kl_full_weight_regularized: inconsistent shapes");

    Matrix cov_q = q.cov;
    Matrix cov_p = p.cov;
    for (std::size_t i = 0; i < d; ++i) {
        cov_q(i, i) += lambda;
        cov_p(i, i) += lambda;
    }
    const Matrix diff = sub(q.mu, p.mu);
    const double logdet_p = logdet_psd(cov_p);
    const double logdet_q = logdet_psd(cov_q);
    const double tr = trace(solve_psd(cov_p, cov_q));
    const double quad = matmul(transpose(diff), solve_psd(cov_p, diff))(0, 0);
    return 0.5 * (logdet_p - logdet_q - static_cast<double>(d) + tr + quad);
}

} // namespace blob
