#ifndef USGAN_TENSOR_HPP
#define USGAN_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "usgan/common.hpp"
#include "usgan/rng.hpp"

namespace usgan {

// Dense row-major tensor of doubles. Batch dimension is implicit (the
// training pipeline runs batch size one), so activations are (C,H,W),
// conv weights (Cout,Cin,k,k) and Gram matrices (C,C).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(numel_of(shape_), 0.0);
    }
    Tensor(std::vector<int> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != numel_of(shape_))
            throw ShapeError("tensor data size does not match shape");
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor gaussian(std::vector<int> shape, Rng& rng, double std_dev, double mean = 0.0) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = mean + std_dev * rng.gaussian();
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // (C,H,W) indexing
    double& at(int c, int h, int w) {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
    }
    double at(int c, int h, int w) const {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    static std::size_t numel_of(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw ShapeError("non-positive tensor dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& shape) {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace usgan

#endif
