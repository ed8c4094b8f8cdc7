#pragma once

#include <functional>
#include <map>
#include <string>

#include "hashgen/tensor.hpp"

namespace hashgen {

// Named learnable tensors; std::map keeps iteration order deterministic.
using Parameters = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Compares the analytic gradient of a deterministic scalar objective against
// central finite differences (f(p+eps) - f(p-eps)) / (2 eps), entry by entry.
// Relative error is |a - n| / max(|a|, |n|, 1e-3); the floor keeps
// finite-difference noise on near-zero entries from dominating.
GradCheckReport grad_check(const std::function<double(const Parameters&)>& objective,
                           const std::function<GradMap(const Parameters&)>& analytic,
                           const Parameters& params, double eps);

} // namespace hashgen
