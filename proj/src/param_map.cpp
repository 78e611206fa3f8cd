#include "blob/param_map.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace blob {

ParamMap parse_param_map(std::string_view name)
{
    if (name == "square")
        return ParamMap::square;
    if (name == "softplus")
        return ParamMap::softplus;
    throw std::invalid_argument("unknown parameter map '" + std::string(name) + "'");
}

std::string_view to_string(ParamMap map) noexcept
{
    return map == ParamMap::square ? "square" : "softplus";
}

double apply(ParamMap map, double rho) noexcept
{
    if (map == ParamMap::square)
        return rho * rho;
    // log1p(exp(rho)) = rho + log1p(exp(-rho)) for large rho
    return rho > 0.0 ? rho + std::log1p(std::exp(-rho)) : std::log1p(std::exp(rho));
}

double derivative(ParamMap map, double rho) noexcept
{
    if (map == ParamMap::square)
        return 2.0 * rho;
    return rho >= 0.0 ? 1.0 / (1.0 + std::exp(-rho)) : std::exp(rho) / (1.0 + std::exp(rho));
}

double inverse(ParamMap map, double sigma)
{
    if (!(sigma > 0.0))
        throw std::domain_error("inverse: sigma must be positive");
    if (map == ParamMap::square)
        return std::sqrt(sigma);
    // log(exp(sigma) - 1) without overflow for large sigma
    return sigma > 30.0 ? sigma + std::log1p(-std::exp(-sigma)) : std::log(std::expm1(sigma));
}

double scalar_kl(ParamMap map, double rho, double sigma_p)
{
    const double s = apply(map, rho);
    if (!(s > 0.0))
        throw std::domain_error("scalar_kl: sigma(rho) must be positive");
    return std::log(sigma_p / s) + s * s / (2.0 * sigma_p * sigma_p) - 0.5;
}

double kl_grad_rho(ParamMap map, double rho, double sigma_p)
{
    if (map == ParamMap::square) {
        if (rho == 0.0)
            throw std::domain_error("kl_grad_rho: rho = 0 under the square map");
        return -2.0 / rho + 2.0 * rho * rho * rho / (sigma_p * sigma_p);
    }
    // dKL/dsigma * dsigma/drho with sigma = softplus(rho)
    const double s = apply(map, rho);
    const double ds = derivative(map, rho);
    return -ds / s + ds * s / (sigma_p * sigma_p);
}

RaceResult convergence_race(ParamMap map, double sigma_p, double sigma_q0, double lr,
                            double target, std::size_t max_steps, bool keep_trace)
{
    if (!(sigma_q0 > 0.0))
        throw std::invalid_argument("convergence_race: sigma_q0 must be positive");

    RaceResult result;
    double rho = inverse(map, sigma_q0);
    double sigma = apply(map, rho);
    if (keep_trace)
        result.sigma_trace.push_back(sigma);

    while (sigma < target && result.steps < max_steps) {
        rho -= lr * kl_grad_rho(map, rho, sigma_p);
        sigma = apply(map, rho);
        ++result.steps;
        if (keep_trace)
            result.sigma_trace.push_back(sigma);
    }
    result.reached = sigma >= target;
    return result;
}

} // namespace blob
