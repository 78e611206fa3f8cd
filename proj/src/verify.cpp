#include "blob/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "blob/adapter.hpp"
#include "blob/kl.hpp"
#include "blob/param_map.hpp"
#include "blob/random.hpp"

namespace blob {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0)
{
    char buf[200];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

VariationalAdapter random_adapter(const VerifyOptions& o, Rng& rng)
{
    Matrix b = o.zero_b ? Matrix(o.m, o.r) : rng.uniform(o.m, o.r, 0.5, 1.5);
    Matrix g = rng.uniform(o.r, o.n, std::sqrt(0.5), 1.0);
    return VariationalAdapter(rng.gaussian(o.m, o.n), std::move(b), rng.gaussian(o.r, o.n),
                              std::move(g));
}

bool full_column_rank(const Matrix& b)
{
    try {
        const Matrix l = cholesky(matmul(transpose(b), b));
        for (std::size_t i = 0; i < l.rows(); ++i)
            if (l(i, i) < 1e-8)
                return false;
        return true;
    } catch (const NotPositiveDefinite&) {
        return false;
    }
}

Matrix random_orthogonal(std::size_t r, Rng& rng)
{
    // Gram-Schmidt on a Gaussian matrix.
    Matrix q = rng.gaussian(r, r);
    for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < r; ++i)
                dot += q(i, j) * q(i, k);
            for (std::size_t i = 0; i < r; ++i)
                q(i, j) -= dot * q(i, k);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < r; ++i)
            norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < r; ++i)
            q(i, j) /= norm;
    }
    return q;
}

CheckResult kl_equivalence(const VariationalAdapter& ad, const PriorSpec& prior)
{
    CheckResult c{"kl_equivalence", false, {}};
    if (!full_column_rank(ad.b)) {
        c.detail = "rank precondition violated: B must have full column rank";
        return c;
    }
    const double exact = kl_closed_form(ad.mean_a, ad.g, prior);
    const FullWeightGaussian q = build_full_posterior(ad);
    const FullWeightGaussian p = build_full_prior(ad.w0, ad.b, prior);
    double prev = INFINITY;
    bool monotone = true;
    double gap = 0.0;
    for (double lambda : {1e-4, 1e-6, 1e-8}) {
        gap = std::abs(kl_full_weight_regularized(q, p, lambda) - exact) / exact;
        monotone = monotone && gap < prev;
        prev = gap;
    }
    c.passed = monotone && gap <= 1e-4;
    c.detail = fmt("closed form %.10g, relative gap at 1e-8 %.3e (limit 1e-4), monotone %g", exact,
                   gap, monotone ? 1.0 : 0.0);
    return c;
}

CheckResult prior_factor_independence(const VariationalAdapter& ad, const PriorSpec& prior,
                                      Rng& rng)
{
    CheckResult c{"prior_factor_independence", false, {}};
    if (!full_column_rank(ad.b)) {
        c.detail = "rank precondition violated: B must have full column rank";
        return c;
    }
    const FullWeightGaussian q = build_full_posterior(ad);
    const double with_b = kl_full_weight_regularized(q, build_full_prior(ad.w0, ad.b, prior), 1e-8);
    const Matrix rq = matmul(ad.b, random_orthogonal(ad.rank(), rng));
    const double with_bq = kl_full_weight_regularized(q, build_full_prior(ad.w0, rq, prior), 1e-8);
    const double rel = std::abs(with_b - with_bq) / std::abs(with_b);
    c.passed = rel <= 1e-6;
    c.detail = fmt("R = B: %.10g, R = BQ: %.10g, relative difference %.3e", with_b, with_bq, rel);
    return c;
}

CheckResult posterior_moments(const VariationalAdapter& ad, std::size_t samples, Rng& rng)
{
    CheckResult c{"posterior_moments", false, {}};
    const FullWeightGaussian q = build_full_posterior(ad);
    const std::size_t d = q.mu.rows();
    std::vector<double> sum(d, 0.0);
    Matrix cross(d, d);
    for (std::size_t s = 0; s < samples; ++s) {
        const Matrix w = vec(add(ad.w0, matmul(ad.b, sample_a(ad, rng.gaussian(ad.rank(), ad.n())))));
        for (std::size_t i = 0; i < d; ++i) {
            const double di = w(i, 0) - q.mu(i, 0);
            sum[i] += di;
            for (std::size_t j = 0; j < d; ++j)
                cross(i, j) += di * (w(j, 0) - q.mu(j, 0));
        }
    }
    const double ns = static_cast<double>(samples);
    double worst_z = 0.0;
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double mean_err = sum[i] / ns;
        const double se = std::sqrt(q.cov(i, i) / ns);
        if (se > 0.0)
            worst_z = std::max(worst_z, std::abs(mean_err) / se);
        else if (mean_err != 0.0)
            worst_z = INFINITY;
        for (std::size_t j = 0; j < d; ++j) {
            const double target = q.cov(i, j);
            if (std::abs(target) <= 1e-6)
                continue;
            const double emp = cross(i, j) / ns - (sum[i] / ns) * (sum[j] / ns);
            worst_rel = std::max(worst_rel, std::abs(emp - target) / std::abs(target));
        }
    }
    c.passed = worst_z <= 3.0 && worst_rel <= 0.05;
    c.detail = fmt("max mean error %.3f standard errors (limit 3), max covariance error %.3f%% "
                   "(limit 5%%)",
                   worst_z, 100.0 * worst_rel);
    return c;
}

CheckResult kl_monte_carlo_agreement(const VariationalAdapter& ad, const PriorSpec& prior,
                                     std::size_t samples, std::uint64_t seed)
{
    CheckResult c{"kl_monte_carlo", false, {}};
    const double exact = kl_closed_form(ad.mean_a, ad.g, prior);
    const MonteCarloEstimate mc =
        kl_monte_carlo(ad.mean_a, ad.g, prior, std::max<std::size_t>(samples, 1000), seed);
    const double z = std::abs(mc.estimate - exact) / mc.std_error;
    c.passed = z <= 3.0;
    c.detail = fmt("closed form %.8g, estimate %.8g, %.3f standard errors (limit 3)", exact,
                   mc.estimate, z);
    return c;
}

CheckResult flipout_moments(const VariationalAdapter& ad, std::size_t draws, Rng& rng)
{
    CheckResult c{"flipout_moments", false, {}};
    const std::size_t batch = 8;
    const Matrix h = rng.gaussian(ad.n(), batch);
    const Matrix mean = forward_mean(ad, h);
    const Matrix omega = ad.omega();
    const std::size_t m = ad.m();

    // Independent per-example sampling: Var z_ki = sum_l B_kl^2 sum_j Omega_lj^2 h_ji^2.
    std::vector<double> naive_var(batch, 0.0);
    for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t l = 0; l < ad.rank(); ++l) {
                double s = 0.0;
                for (std::size_t j = 0; j < ad.n(); ++j)
                    s += omega(l, j) * omega(l, j) * h(j, i) * h(j, i);
                naive_var[i] += ad.b(k, l) * ad.b(k, l) * s;
            }

    Matrix sum(m, batch);
    Matrix sum_sq(m, batch);
    for (std::size_t s = 0; s < draws; ++s) {
        const FlipoutMasks masks = FlipoutMasks::sample(rng, ad.n(), batch, ad.rank());
        const Matrix dz = sub(forward_flipout(ad, h, masks), mean);
        sum = add(sum, dz);
        sum_sq = add(sum_sq, hadamard(dz, dz));
    }
    const double nd = static_cast<double>(draws);
    double worst_z = 0.0;
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        double total_var = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double mu = sum(k, i) / nd;
            const double var = sum_sq(k, i) / nd - mu * mu;
            total_var += var;
            if (var > 0.0)
                worst_z = std::max(worst_z, std::abs(mu) / std::sqrt(var / nd));
        }
        if (naive_var[i] > 0.0)
            worst_rel = std::max(worst_rel, std::abs(total_var - naive_var[i]) / naive_var[i]);
        else if (total_var != 0.0)
            worst_rel = INFINITY;
    }
    c.passed = worst_z <= 4.0 && worst_rel <= 0.05;
    c.detail = fmt("max mean deviation %.3f standard errors (limit 4), max per-example variance "
                   "error %.3f%% (limit 5%%)",
                   worst_z, 100.0 * worst_rel);
    return c;
}

CheckResult parameterization_race()
{
    CheckResult c{"parameterization_race", false, {}};
    const RaceResult sq = convergence_race(ParamMap::square, 1.0, 0.01, 1e-4, 0.9, 200000);
    const RaceResult sp = convergence_race(ParamMap::softplus, 1.0, 0.01, 1e-4, 0.9, 200000);
    c.passed = sq.reached && sq.steps <= 10000 && sp.steps > 50000 && sq.steps < sp.steps;
    c.detail = fmt("square %.0f steps (limit 10000), softplus %.0f steps (must exceed 50000)",
                   static_cast<double>(sq.steps), static_cast<double>(sp.steps));
    return c;
}

} // namespace

std::vector<CheckResult> verify_theorems(const VerifyOptions& o)
{
    if (o.m * o.n > kFullWeightLimit)
        return {{"dimensions", false, "m*n exceeds the materialization limit"}};
    std::vector<CheckResult> out;
    try {
        Rng rng(o.seed);
        const VariationalAdapter ad = random_adapter(o, rng);
        const PriorSpec prior(o.sigma_p);
        out.push_back(kl_equivalence(ad, prior));
        out.push_back(prior_factor_independence(ad, prior, rng));
        out.push_back(posterior_moments(ad, o.samples, rng));
        out.push_back(kl_monte_carlo_agreement(ad, prior, o.samples, derive_seed(o.seed, 1)));
        out.push_back(flipout_moments(ad, std::max<std::size_t>(o.samples / 10, 1000), rng));
    } catch (const std::exception& e) {
        out.push_back({"setup", false, e.what()});
    }
    out.push_back(parameterization_race());
    return out;
}

void write_checks(std::ostream& out, const std::vector<CheckResult>& checks)
{
    for (const auto& c : checks)
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
}

} // namespace blob
