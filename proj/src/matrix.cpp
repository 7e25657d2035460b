#include "normopt/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace normopt {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw std::invalid_argument("Matrix: data length does not match shape");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
        if (row.size() != cols_)
            throw std::invalid_argument("Matrix: ragged initializer");
        data_.insert(data_.end(), row.begin(), row.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(std::span<const double> entries) {
    Matrix m(entries.size(), entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
    return m;
}

Matrix Matrix::column(std::span<const double> entries) {
    Matrix m(entries.size(), 1);
    for (std::size_t i = 0; i < entries.size(); ++i) m[i] = entries[i];
    return m;
}

bool Matrix::is_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

static void check_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

Matrix& Matrix::operator+=(const Matrix& o) {
    check_shape(*this, o, "Matrix::operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    check_shape(*this, o, "Matrix::operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix& Matrix::add_scaled(const Matrix& o, double s) {
    check_shape(*this, o, "Matrix::add_scaled");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    return *this;
}

Matrix& Matrix::scale_add(double a, const Matrix& o, double b) {
    check_shape(*this, o, "Matrix::scale_add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = a * data_[i] + b * o.data_[i];
    return *this;
}

Matrix& Matrix::fill(double v) {
    for (double& x : data_) x = v;
    return *this;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    const std::size_t m = a.rows(), n = a.cols(), p = b.cols();
    Matrix c(m, p);
    // k-blocked i-k-j order: the inner j loop runs over contiguous rows of b
    // and c, and a block of b rows stays cache-resident across the i loop.
    constexpr std::size_t kblock = 64;
    for (std::size_t k0 = 0; k0 < n; k0 += kblock) {
        const std::size_t k1 = std::min(k0 + kblock, n);
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = c.data() + i * p;
            for (std::size_t k = k0; k < k1; ++k) {
                const double aik = a(i, k);
                const double* brow = b.data() + k * p;
                for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) { return matmul(a.transpose(), b); }

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) { return matmul(a, b.transpose()); }

Matrix hadamard(const Matrix& a, const Matrix& b) {
    check_shape(a, b, "hadamard");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
    return c;
}

double dot(const Matrix& a, const Matrix& b) {
    check_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace normopt
