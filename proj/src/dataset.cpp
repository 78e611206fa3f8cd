#include "blob/dataset.hpp"

#include <string>

namespace blob {

Matrix Dataset::columns(const std::vector<std::size_t>& idx) const
{
    Matrix out(x.cols(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
        for (std::size_t i = 0; i < x.cols(); ++i)
            out(i, j) = x(idx[j], i);
    return out;
}

Matrix Dataset::all_columns() const
{
    return transpose(x);
}

std::vector<int> Dataset::labels(const std::vector<std::size_t>& idx) const
{
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx)
        out.push_back(y[i]);
    return out;
}

void Dataset::validate() const
{
    if (x.rows() != y.size())
        throw DimensionError("dataset: " + std::to_string(x.rows()) + " rows but " +
                             std::to_string(y.size()) + " labels");
    if (y.empty())
        throw std::invalid_argument("dataset: empty");
    for (int label : y)
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes)
            throw std::invalid_argument("dataset: label " + std::to_string(label) +
                                        " out of range");
}

} // namespace blob
