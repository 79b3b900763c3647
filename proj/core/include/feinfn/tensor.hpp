#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace feinfn {

using i64 = std::int64_t;

/// Dense row-major n-dimensional array of doubles. No implicit broadcasting;
/// all shape logic lives in the operations that consume tensors.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<i64> shape);

    static Tensor zeros(std::vector<i64> shape);
    static Tensor full(std::vector<i64> shape, double value);
    static Tensor from(std::vector<i64> shape, std::vector<double> values);

    const std::vector<i64>& shape() const { return shape_; }
    i64 rank() const { return static_cast<i64>(shape_.size()); }
    i64 dim(i64 axis) const { return shape_[static_cast<size_t>(axis)]; }
    i64 size() const { return static_cast<i64>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](i64 i) { return data_[static_cast<size_t>(i)]; }
    double operator[](i64 i) const { return data_[static_cast<size_t>(i)]; }

    /// Multi-index accessor (bounds-unchecked beyond debug asserts); intended
    /// for tests and small setup code, not inner loops.
    double& at(std::initializer_list<i64> idx);
    double at(std::initializer_list<i64> idx) const;

    i64 flat_index(std::initializer_list<i64> idx) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    void fill(double value);

    /// Reinterpret the same buffer under a new shape of equal element count.
    void reshape_in_place(std::vector<i64> new_shape);

    double min() const;
    double max() const;
    bool all_finite() const;

private:
    std::vector<i64> shape_;
    std::vector<double> data_;
};

i64 shape_size(const std::vector<i64>& shape);
std::string shape_to_string(const std::vector<i64>& shape);

}  // namespace feinfn
