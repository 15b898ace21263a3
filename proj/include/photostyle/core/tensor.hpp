#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "photostyle/core/error.hpp"

namespace photostyle {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Dense row-major double tensor. Shapes follow the NCHW convention for
// image batches; 2-D tensors are (rows, cols). double everywhere: the
// gradient checks require it and desk-scale nets do not need float speed.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(element_count(shape_), 0.0);
    }

    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static std::size_t element_count(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d < 0) throw ValidationError("tensor dimension must be >= 0");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    int ndim() const { return static_cast<int>(shape_.size()); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at4(int n, int c, int h, int w) {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    double at4(int n, int c, int h, int w) const {
        return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    double& at2(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    double at2(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    // Flat Eigen views.
    VecMap flat() { return VecMap(data_.data(), static_cast<Eigen::Index>(data_.size())); }
    ConstVecMap flat() const {
        return ConstVecMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
    }
    MatMap mat(int rows, int cols) { return MatMap(data_.data(), rows, cols); }
    ConstMatMap mat(int rows, int cols) const { return ConstMatMap(data_.data(), rows, cols); }

    // (rows, cols) view of a 2-D tensor.
    MatMap mat2() { return mat(shape_.at(0), shape_.at(1)); }
    ConstMatMap mat2() const { return mat(shape_.at(0), shape_.at(1)); }

    std::string shape_str() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
        os << ')';
        return os.str();
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

inline void require_shape(const Tensor& t, const std::vector<int>& expected,
                          const std::string& what) {
    if (t.shape() != expected) {
        Tensor e(expected);
        throw ValidationError(what + ": expected shape " + e.shape_str() + ", got " +
                              t.shape_str());
    }
}

}  // namespace photostyle
