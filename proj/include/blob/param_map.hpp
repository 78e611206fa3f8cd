#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace blob {

// Map from a real parameter rho to a standard deviation sigma(rho).
enum class ParamMap { square, softplus };

ParamMap parse_param_map(std::string_view name);
std::string_view to_string(ParamMap map) noexcept;

// square: rho^2. softplus: log(1 + exp(rho)), overflow-safe.
double apply(ParamMap map, double rho) noexcept;
// d sigma / d rho.
double derivative(ParamMap map, double rho) noexcept;
// Inverse for sigma > 0; the square branch returns the positive root.
double inverse(ParamMap map, double sigma);

// KL(N(0, sigma(rho)^2) || N(0, sigma_p^2)) for a single entry.
double scalar_kl(ParamMap map, double rho, double sigma_p);

// d scalar_kl / d rho. Throws std::domain_error for rho == 0 under the square map.
double kl_grad_rho(ParamMap map, double rho, double sigma_p);

struct RaceResult {
    std::size_t steps = 0;  // steps taken until sigma >= target, or max_steps
    bool reached = false;
    std::vector<double> sigma_trace;  // sigma after each step, index 0 = initial
};

// Plain gradient descent on scalar_kl alone, starting from sigma_q0.
RaceResult convergence_race(ParamMap map, double sigma_p, double sigma_q0, double lr,
                            double target, std::size_t max_steps, bool keep_trace = false);

} // namespace blob
