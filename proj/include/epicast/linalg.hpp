#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace epicast {

using Vector = std::vector<double>;

// Dense row-major matrix. Sizes in this project stay small (<= ~100 x 2010),
// so plain contiguous loops are enough for the compiler to vectorize.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Matrix/vector views into a flat parameter buffer.
template <typename T>
struct BasicMatView {
    T* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    T* row(std::size_t r) const { return data + r * cols; }
    std::size_t size() const { return rows * cols; }

    operator BasicMatView<const T>() const
        requires(!std::is_const_v<T>)
    {
        return {data, rows, cols};
    }
};

template <typename T>
struct BasicVecView {
    T* data = nullptr;
    std::size_t len = 0;

    T& operator[](std::size_t i) const { return data[i]; }
    std::size_t size() const { return len; }

    operator BasicVecView<const T>() const
        requires(!std::is_const_v<T>)
    {
        return {data, len};
    }
};

using MatView = BasicMatView<double>;
using ConstMatView = BasicMatView<const double>;
using VecView = BasicVecView<double>;
using ConstVecView = BasicVecView<const double>;

// y = W * x
inline void matvec(ConstMatView w, const double* x, double* y) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* wr = w.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

// y += W^T * d  (d has length rows, y length cols)
inline void matvec_transpose_add(ConstMatView w, const double* d, double* y) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* wr = w.row(r);
        const double dr = d[r];
        for (std::size_t c = 0; c < w.cols; ++c) y[c] += dr * wr[c];
    }
}

// W += d * x^T  (rank-one update, d has length rows, x length cols)
inline void outer_add(MatView w, const double* d, const double* x) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        double* wr = w.row(r);
        const double dr = d[r];
        for (std::size_t c = 0; c < w.cols; ++c) wr[c] += dr * x[c];
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double l2_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace epicast
