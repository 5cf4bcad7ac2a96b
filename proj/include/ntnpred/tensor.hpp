#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ntnpred {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of doubles with an optional gradient slot.
///
/// Layer kernels use (B, Lf, Lt, C) for 2-D feature maps and (B, Lt, N) for
/// sequences. Rank-3 maps (Lf, Lt, C) are accepted by the public layer ops
/// and treated as a batch of one.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool has_grad() const { return !grad_.empty(); }
    void enable_grad();
    void zero_grad();
    std::span<double> grad() { return grad_; }
    std::span<const double> grad() const { return grad_; }

    /// Same data under a new shape with equal element count.
    Tensor reshaped(Shape shape) const;
    void reshape(Shape shape);

    void fill(double v);

private:
    Shape shape_;
    std::vector<double> data_;
    std::vector<double> grad_;
};

double dot(const Tensor& a, const Tensor& b);

}  // namespace ntnpred
