#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace normopt {

// Dense row-major matrix of doubles. The only numeric carrier in the
// library; vectors are p x 1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);  // zero-filled
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    static Matrix identity(std::size_t n);
    static Matrix diag(std::span<const double> entries);
    static Matrix column(std::span<const double> entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool is_finite() const;

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);
    // *this += s * o
    Matrix& add_scaled(const Matrix& o, double s);
    // *this = a * *this + b * o  (one pass; the EMA workhorse)
    Matrix& scale_add(double a, const Matrix& o, double b);
    Matrix& fill(double v);

    Matrix transpose() const;
    double frobenius_norm() const;
    double max_abs() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a^T * b
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// c = a * b^T
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
// elementwise product
Matrix hadamard(const Matrix& a, const Matrix& b);
// Frobenius inner product
double dot(const Matrix& a, const Matrix& b);

}  // namespace normopt
