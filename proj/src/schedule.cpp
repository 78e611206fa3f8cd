#include "blob/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace blob {

KlMode parse_kl_mode(std::string_view name)
{
    if (name == "uniform")
        return KlMode::uniform;
    if (name == "blundell")
        return KlMode::blundell;
    if (name == "blob" || name == "blob_ascending")
        return KlMode::blob_ascending;
    if (name == "blob_literal")
        return KlMode::blob_literal;
    throw std::invalid_argument("unknown KL schedule mode '" + std::string(name) + "'");
}

std::string_view to_string(KlMode mode) noexcept
{
    switch (mode) {
    case KlMode::uniform:
        return "uniform";
    case KlMode::blundell:
        return "blundell";
    case KlMode::blob_ascending:
        return "blob_ascending";
    case KlMode::blob_literal:
        return "blob_literal";
    }
    return "?";
}

double pseudo_rescaled_length(std::size_t dataset_len, double gamma)
{
    if (!(gamma > 0.0))
        throw std::invalid_argument("pseudo_rescaled_length: gamma must be positive");
    return 100.0 * std::pow(static_cast<double>(dataset_len), std::numbers::pi / gamma);
}

KlSchedule KlSchedule::for_dataset(std::size_t dataset_len, std::size_t batch_size, KlMode mode,
                                   double gamma)
{
    if (dataset_len == 0 || batch_size == 0)
        throw std::invalid_argument("KlSchedule: dataset length and batch size must be positive");
    KlSchedule s;
    s.mode = mode;
    s.gamma = gamma;
    s.rescaled_len = static_cast<std::size_t>(std::floor(pseudo_rescaled_length(dataset_len, gamma)));
    s.n_minibatches = std::max<std::size_t>(1, (s.rescaled_len + batch_size - 1) / batch_size);
    return s;
}

double kl_weight_at(const KlSchedule& schedule, std::size_t step)
{
    if (step == 0)
        throw std::invalid_argument("kl_weight_at: steps are 1-based");
    const std::size_t m = schedule.n_minibatches;
    if (m == 0)
        throw std::invalid_argument("kl_weight_at: empty warm-up window");
    const double i = static_cast<double>(std::min(step, m));
    const double md = static_cast<double>(m);
    // Written as ratios of powers of two that stay finite for large M.
    const double tail = -std::expm1(-md * std::numbers::ln2);  // 1 - 2^-M
    switch (schedule.mode) {
    case KlMode::uniform:
        return 1.0 / md;
    case KlMode::blundell:
        return std::exp2(-i) / tail;
    case KlMode::blob_ascending:
        return std::exp2(i - md - 1.0) / tail;
    case KlMode::blob_literal:
        return std::exp2(i - md) / tail;
    }
    return 0.0;
}

} // namespace blob
