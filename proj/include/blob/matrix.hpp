#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blob {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NotPositiveDefinite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    // Throws NonFiniteError if any literal is NaN/Inf.
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);
    static Matrix diag(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool all_finite() const noexcept;
    bool same_shape(const Matrix& other) const noexcept
    {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::string shape_string(const Matrix& a);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix kron(const Matrix& a, const Matrix& b);
// Column-stacking vectorization: vec(X)[i + rows*j] = X(i, j).
Matrix vec(const Matrix& a);
// Inverse of vec for a given shape.
Matrix unvec(const Matrix& v, std::size_t rows, std::size_t cols);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix add_scalar(const Matrix& a, double s);
// a += s * b, in place.
void axpy(Matrix& a, double s, const Matrix& b);

double sum(const Matrix& a);
// Sum of squared entries, ||A||_2^2 in the entrywise p-norm sense.
double frobenius_sq(const Matrix& a);
double trace(const Matrix& a);

// Lower Cholesky factor L with A = L L^T. Throws NotPositiveDefinite.
Matrix cholesky(const Matrix& a);
double logdet_psd(const Matrix& a);
// Solves A X = B for symmetric positive definite A.
Matrix solve_psd(const Matrix& a, const Matrix& b);

// Throws NonFiniteError naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& a, const std::string& what);

} // namespace blob
