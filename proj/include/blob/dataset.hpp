#pragma once

#include <cstddef>
#include <vector>

#include "blob/matrix.hpp"

namespace blob {

// Labeled examples, one per row of `x`.
struct Dataset {
    Matrix x;
    std::vector<int> y;
    std::size_t n_classes = 0;

    std::size_t size() const noexcept { return y.size(); }
    std::size_t input_dim() const noexcept { return x.cols(); }

    // Rows `idx` as columns of a (input_dim × idx.size()) matrix.
    Matrix columns(const std::vector<std::size_t>& idx) const;
    Matrix all_columns() const;
    std::vector<int> labels(const std::vector<std::size_t>& idx) const;

    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

} // namespace blob
