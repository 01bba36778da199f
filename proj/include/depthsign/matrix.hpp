#ifndef DEPTHSIGN_MATRIX_HPP
#define DEPTHSIGN_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "depthsign/errors.hpp"
#include "depthsign/rng.hpp"

namespace depthsign {

/// Dense row-major matrix of doubles.
///
/// This is the universal numeric carrier of the library. Batches follow the
/// samples-as-columns convention: an `input_size x n` matrix holds n samples.
/// All arithmetic is 64-bit; the gradient checks in the test suite rely on
/// that precision.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows_ * cols_)
            throw ShapeError("Matrix: " + std::to_string(data_.size()) +
                             " values do not fill " + shape_str());
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows)
        : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
        data_.reserve(rows_ * cols_);
        for (const auto& row : rows) {
            if (row.size() != cols_)
                throw ShapeError("Matrix: ragged initializer rows");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace detail {
inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
}
} // namespace detail

/// Standard matrix product. Accumulation order per output entry is the plain
/// triple loop's, so results are reproducible bit for bit.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: dimension mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    Matrix c(a.rows(), b.cols());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* crow = pc + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = arow[l];
            const double* brow = pb + l * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
    return t;
}

/// Map every element through f.
template <typename F>
Matrix elementwise(const Matrix& m, F&& f) {
    Matrix out(m.rows(), m.cols());
    auto src = m.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
    return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "add");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "subtract");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = a.data()[i] - b.data()[i];
    return out;
}

inline Matrix scale(const Matrix& m, double s) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = m.data()[i] * s;
    return out;
}

/// Elementwise product.
inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    detail::require_same_shape(a, b, "hadamard");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

/// Add a rows x 1 column vector to every column of m.
inline Matrix add_col(const Matrix& m, const Matrix& col) {
    if (col.cols() != 1 || col.rows() != m.rows())
        throw ShapeError("add_col: bias " + col.shape_str() + " does not match " +
                         m.shape_str());
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double b = col(r, 0);
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) + b;
    }
    return out;
}

/// Sum of each row as a rows x 1 vector.
inline Matrix row_sums(const Matrix& m) {
    Matrix out(m.rows(), 1);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c);
        out(r, 0) = s;
    }
    return out;
}

/// Mean of each row as a rows x 1 vector. Columns must be nonzero.
inline Matrix row_means(const Matrix& m) {
    if (m.cols() == 0) throw ShapeError("row_means: matrix has no columns");
    Matrix out = row_sums(m);
    const double inv = 1.0 / static_cast<double>(m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, 0) *= inv;
    return out;
}

inline double sum(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v;
    return s;
}

/// Sum of squared entries.
inline double frobenius_sq(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return s;
}

inline double max_abs(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s = std::max(s, std::fabs(v));
    return s;
}

/// Gather the given columns, in order, into a new matrix.
inline Matrix slice_cols(const Matrix& m, std::span<const std::size_t> indices) {
    Matrix out(m.rows(), indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t c = indices[k];
        if (c >= m.cols())
            throw ParameterError("slice_cols: column " + std::to_string(c) +
                                 " out of range for " + m.shape_str());
        for (std::size_t r = 0; r < m.rows(); ++r) out(r, k) = m(r, c);
    }
    return out;
}

/// Index of the largest entry per column; ties go to the lowest row index.
inline std::vector<std::size_t> col_argmax(const Matrix& m) {
    if (m.rows() == 0) throw ShapeError("col_argmax: matrix has no rows");
    std::vector<std::size_t> out(m.cols(), 0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double best = m(0, c);
        std::size_t arg = 0;
        for (std::size_t r = 1; r < m.rows(); ++r) {
            if (m(r, c) > best) {
                best = m(r, c);
                arg = r;
            }
        }
        out[c] = arg;
    }
    return out;
}

/// Matrix of uniform draws in [lo, hi), deterministic for a given stream.
inline Matrix rand_uniform(RngState& rng, std::size_t rows, std::size_t cols,
                           double lo, double hi) {
    if (!(lo < hi))
        throw ParameterError("rand_uniform: lo (" + std::to_string(lo) +
                             ") must be below hi (" + std::to_string(hi) + ")");
    Matrix out(rows, cols);
    for (double& v : out.data()) v = rng.next_double(lo, hi);
    return out;
}

} // namespace depthsign

#endif // DEPTHSIGN_MATRIX_HPP
