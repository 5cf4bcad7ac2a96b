#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ntnpred {

using cplx = std::complex<double>;

/// Row-major complex matrix; rows are subcarriers, columns OFDM symbols.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols, cplx fill = {}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::vector<cplx>& values() { return data_; }
    const std::vector<cplx>& values() const { return data_; }

    /// Columns [first, first+count).
    CMatrix columns(std::size_t first, std::size_t count) const;
    void set_columns(std::size_t first, const CMatrix& block);

    double frobenius_sq() const;
    double mean_power() const { return data_.empty() ? 0.0 : frobenius_sq() / static_cast<double>(data_.size()); }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<cplx> data_;
};

/// ||a - b||_F^2 / ||ref||_F^2.
double nmse(const CMatrix& estimate, const CMatrix& truth);
double squared_error(const CMatrix& a, const CMatrix& b);

}  // namespace ntnpred
