#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hashgen/error.hpp"
#include "hashgen/rng.hpp"

namespace hashgen {

// Dense row-major tensor of doubles, rank 1 or 2. Rank-1 tensors act as row
// vectors where an orientation matters; a scalar is shape {1}.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<int> shp, std::vector<double> d, bool rg = false);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar(double value);
    // Uniform(lo, hi) entries drawn in row-major order.
    static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng);

    int rows() const { return shape.size() == 2 ? shape[0] : 1; }
    int cols() const { return shape.size() == 2 ? shape[1] : shape[0]; }
    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    double l2_norm() const;
    void fill(double value);
    void scale_inplace(double k);
    void add_inplace(const Tensor& other); // shapes must match
};

std::string shape_str(const std::vector<int>& shape);
std::size_t shape_numel(const std::vector<int>& shape);

} // namespace hashgen
