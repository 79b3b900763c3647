#include "feinfn/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace feinfn {

i64 shape_size(const std::vector<i64>& shape) {
    i64 n = 1;
    for (i64 d : shape) {
        if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_to_string(shape));
        n *= d;
    }
    return n;
}

std::string shape_to_string(const std::vector<i64>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<i64> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_size(shape_)), 0.0);
}

Tensor Tensor::zeros(std::vector<i64> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<i64> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::from(std::vector<i64> shape, std::vector<double> values) {
    if (shape_size(shape) != static_cast<i64>(values.size()))
        throw std::invalid_argument("value count does not match shape " + shape_to_string(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(values);
    return t;
}

i64 Tensor::flat_index(std::initializer_list<i64> idx) const {
    assert(idx.size() == shape_.size());
    i64 flat = 0;
    size_t k = 0;
    for (i64 i : idx) {
        assert(i >= 0 && i < shape_[k]);
        flat = flat * shape_[k] + i;
        ++k;
    }
    return flat;
}

double& Tensor::at(std::initializer_list<i64> idx) { return data_[static_cast<size_t>(flat_index(idx))]; }
double Tensor::at(std::initializer_list<i64> idx) const { return data_[static_cast<size_t>(flat_index(idx))]; }

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape_in_place(std::vector<i64> new_shape) {
    if (shape_size(new_shape) != size())
        throw std::invalid_argument("reshape to " + shape_to_string(new_shape) + " changes element count");
    shape_ = std::move(new_shape);
}

double Tensor::min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : data_) m = std::min(m, v);
    return m;
}

double Tensor::max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : data_) m = std::max(m, v);
    return m;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace feinfn
