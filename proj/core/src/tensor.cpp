#include "hashgen/tensor.hpp"

#include <cmath>
#include <sstream>

namespace hashgen {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<int> shp, std::vector<double> d, bool rg)
    : shape(std::move(shp)), data(std::move(d)), requires_grad(rg) {
    if (shape.empty() || shape.size() > 2)
        throw shape_error("tensor rank must be 1 or 2, got " + shape_str(shape));
    for (int dim : shape)
        if (dim <= 0) throw shape_error("tensor dimensions must be positive, got " + shape_str(shape));
    if (shape_numel(shape) != data.size())
        throw shape_error("tensor data length " + std::to_string(data.size()) +
                          " does not match shape " + shape_str(shape));
}

Tensor Tensor::zeros(std::vector<int> shape) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
    std::size_t n = shape_numel(shape);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(d));
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::l2_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
}

void Tensor::fill(double value) {
    for (double& v : data) v = value;
}

void Tensor::scale_inplace(double k) {
    for (double& v : data) v *= k;
}

void Tensor::add_inplace(const Tensor& other) {
    if (!same_shape(other))
        throw shape_error("add_inplace shape mismatch: " + shape_str(shape) + " vs " +
                          shape_str(other.shape));
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
}

} // namespace hashgen
