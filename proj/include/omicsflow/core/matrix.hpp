#ifndef OMICSFLOW_CORE_MATRIX_HPP
#define OMICSFLOW_CORE_MATRIX_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

/**
 * @file matrix.hpp
 * @brief Dense row-major matrix used throughout the library.
 */

namespace omicsflow {

/**
 * @brief Dense row-major matrix of `T`.
 *
 * Rows are observations (patients) and columns are features (genes) everywhere in this library.
 * Storage is a single contiguous vector so that rows can be handed out as spans.
 */
template<typename T = double>
class BasicMatrix {
public:
    BasicMatrix() = default;

    BasicMatrix(std::size_t nrow, std::size_t ncol, T fill = T{}) :
        nrow_(nrow), ncol_(ncol), data_(nrow * ncol, fill) {}

    BasicMatrix(std::size_t nrow, std::size_t ncol, std::vector<T> data) :
        nrow_(nrow), ncol_(ncol), data_(std::move(data))
    {
        if (data_.size() != nrow_ * ncol_) {
            throw std::invalid_argument("matrix data length does not match its dimensions");
        }
    }

    std::size_t rows() const { return nrow_; }
    std::size_t cols() const { return ncol_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * ncol_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * ncol_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * ncol_, ncol_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * ncol_, ncol_}; }

    std::vector<T> column(std::size_t c) const {
        std::vector<T> out(nrow_);
        for (std::size_t r = 0; r < nrow_; ++r) {
            out[r] = data_[r * ncol_ + c];
        }
        return out;
    }

    void set_column(std::size_t c, std::span<const T> values) {
        for (std::size_t r = 0; r < nrow_; ++r) {
            data_[r * ncol_ + c] = values[r];
        }
    }

    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    BasicMatrix transpose() const {
        BasicMatrix out(ncol_, nrow_);
        for (std::size_t r = 0; r < nrow_; ++r) {
            for (std::size_t c = 0; c < ncol_; ++c) {
                out(c, r) = (*this)(r, c);
            }
        }
        return out;
    }

    /**
     * Copy of the rows at `indices`, in that order.
     */
    BasicMatrix select_rows(std::span<const std::size_t> indices) const {
        BasicMatrix out(indices.size(), ncol_);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            auto src = row(indices[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    BasicMatrix select_cols(std::span<const std::size_t> indices) const {
        BasicMatrix out(nrow_, indices.size());
        for (std::size_t r = 0; r < nrow_; ++r) {
            for (std::size_t j = 0; j < indices.size(); ++j) {
                out(r, j) = (*this)(r, indices[j]);
            }
        }
        return out;
    }

    friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

private:
    std::size_t nrow_ = 0;
    std::size_t ncol_ = 0;
    std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using IntMatrix = BasicMatrix<int>;

/**
 * Computes `a * b^T`, i.e. each row of `a` dotted against each row of `b`.
 * Used to apply row-orthonormal projections to row-major feature matrices.
 */
inline Matrix multiply_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("inner dimensions differ in multiply_transposed");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ai = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto bj = b.row(j);
            double s = 0;
            for (std::size_t k = 0; k < ai.size(); ++k) {
                s += ai[k] * bj[k];
            }
            out(i, j) = s;
        }
    }
    return out;
}

}

#endif
