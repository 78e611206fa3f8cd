#include "blob/matrix.hpp"

#include <cmath>
#include <limits>

namespace blob {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op)
{
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                             shape_string(b));
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f)
{
    require_same_shape(a, b, op);
    Matrix out(a.rows(), a.cols());
    auto x = a.data();
    auto y = b.data();
    auto z = out.data();
    for (std::size_t k = 0; k < z.size(); ++k)
        z[k] = f(x[k], y[k]);
    return out;
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != rows_ * cols_)
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows) + "x" +
                             std::to_string(cols));
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows)
{
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c)
            throw DimensionError("Matrix::from_rows: ragged rows");
        for (double v : row) {
            if (!std::isfinite(v))
                throw NonFiniteError("Matrix::from_rows: non-finite literal");
            data.push_back(v);
        }
    }
    return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        out(i, i) = 1.0;
    return out;
}

Matrix Matrix::column(std::span<const double> values)
{
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::diag(std::span<const double> values)
{
    Matrix out(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out(i, i) = values[i];
    return out;
}

bool Matrix::all_finite() const noexcept
{
    for (double v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

std::string shape_string(const Matrix& a)
{
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows())
        throw DimensionError("matmul: " + shape_string(a) + " * " + shape_string(b));
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Matrix transpose(const Matrix& a)
{
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(j, i) = a(i, j);
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b)
{
    constexpr auto max = std::numeric_limits<std::size_t>::max();
    if ((b.rows() != 0 && a.rows() > max / b.rows()) ||
        (b.cols() != 0 && a.cols() > max / b.cols()))
        throw DimensionError("kron: product dimensions overflow");
    const std::size_t rows = a.rows() * b.rows();
    const std::size_t cols = a.cols() * b.cols();
    if (cols != 0 && rows > max / cols)
        throw DimensionError("kron: product size overflows");

    Matrix out(rows, cols);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return out;
}

Matrix vec(const Matrix& a)
{
    Matrix out(a.size(), 1);
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i)
            out(i + a.rows() * j, 0) = a(i, j);
    return out;
}

Matrix unvec(const Matrix& v, std::size_t rows, std::size_t cols)
{
    if (v.cols() != 1 || v.rows() != rows * cols)
        throw DimensionError("unvec: " + shape_string(v) + " cannot be reshaped to " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    Matrix out(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i)
            out(i, j) = v(i + rows * j, 0);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b)
{
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix sub(const Matrix& a, const Matrix& b)
{
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b)
{
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Matrix scale(const Matrix& a, double s)
{
    Matrix out = a;
    for (double& v : out.data())
        v *= s;
    return out;
}

Matrix add_scalar(const Matrix& a, double s)
{
    Matrix out = a;
    for (double& v : out.data())
        v += s;
    return out;
}

void axpy(Matrix& a, double s, const Matrix& b)
{
    require_same_shape(a, b, "axpy");
    auto x = a.data();
    auto y = b.data();
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] += s * y[k];
}

double sum(const Matrix& a)
{
    double s = 0.0;
    for (double v : a.data())
        s += v;
    return s;
}

double frobenius_sq(const Matrix& a)
{
    double s = 0.0;
    for (double v : a.data())
        s += v * v;
    return s;
}

double trace(const Matrix& a)
{
    if (a.rows() != a.cols())
        throw DimensionError("trace: non-square " + shape_string(a));
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        s += a(i, i);
    return s;
}

Matrix cholesky(const Matrix& a)
{
    if (a.rows() != a.cols())
        throw DimensionError("cholesky: non-square " + shape_string(a));
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k)
            d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d))
            throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) +
                                      " is not positive (" + std::to_string(d) + ")");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

double logdet_psd(const Matrix& a)
{
    const Matrix l = cholesky(a);
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i)
        s += std::log(l(i, i));
    return 2.0 * s;
}

Matrix solve_psd(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows())
        throw DimensionError("solve_psd: " + shape_string(a) + " vs rhs " + shape_string(b));
    const Matrix l = cholesky(a);
    const std::size_t n = l.rows();
    Matrix x = b;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        // forward: L y = b
        for (std::size_t i = 0; i < n; ++i) {
            double s = x(i, c);
            for (std::size_t k = 0; k < i; ++k)
                s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
        // backward: L^T x = y
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k)
                s -= l(k, ii) * x(k, c);
            x(ii, c) = s / l(ii, ii);
        }
    }
    return x;
}

void require_finite(const Matrix& a, const std::string& what)
{
    if (!a.all_finite())
        throw NonFiniteError(what + " contains non-finite values");
}

} // namespace blob
