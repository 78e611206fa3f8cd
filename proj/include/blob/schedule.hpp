#pragma once

#include <cstddef>
#include <string_view>

namespace blob {

// Per-minibatch KL weights over one (pseudo-rescaled) epoch of M minibatches,
// i = 1..M:
//   uniform          1/M
//   blundell         2^(M-i) / (2^M - 1)
//   blob_ascending   2^i / (2^(M+1) - 2)   (normalized so the weights sum to 1)
//   blob_literal     2^i / (2^M - 1)       (as printed; sums to ~2, can exceed 1)
enum class KlMode { uniform, blundell, blob_ascending, blob_literal };

KlMode parse_kl_mode(std::string_view name);
std::string_view to_string(KlMode mode) noexcept;

struct KlSchedule {
    std::size_t n_minibatches = 1;  // warm-up window, ceil(L* / batch_size)
    std::size_t rescaled_len = 0;   // L*
    KlMode mode = KlMode::blob_ascending;
    double gamma = 8.0;

    // L* = floor(100 * L0^(pi / gamma)); window = ceil(L* / batch_size).
    static KlSchedule for_dataset(std::size_t dataset_len, std::size_t batch_size, KlMode mode,
                                  double gamma = 8.0);
};

// 100 * L0^(pi / gamma), unrounded.
double pseudo_rescaled_length(std::size_t dataset_len, double gamma);

// Weight for 1-based training step `step`. Steps past the warm-up window keep
// the final weight of the window.
double kl_weight_at(const KlSchedule& schedule, std::size_t step);

} // namespace blob
