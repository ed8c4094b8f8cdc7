#include "hashgen/gradcheck.hpp"

#include <cmath>

#include "hashgen/error.hpp"

namespace hashgen {

GradCheckReport grad_check(const std::function<double(const Parameters&)>& objective,
                           const std::function<GradMap(const Parameters&)>& analytic,
                           const Parameters& params, double eps) {
    if (eps <= 0.0) throw contract_error("grad_check: eps must be positive");

    GradMap grads = analytic(params);
    GradCheckReport report;
    Parameters probe = params;

    for (const auto& [name, tensor] : params) {
        auto git = grads.find(name);
        if (git == grads.end())
            throw contract_error("grad_check: analytic gradient missing for parameter '" + name + "'");
        const Tensor& g = git->second;
        if (g.shape != tensor.shape)
            throw shape_error("grad_check: gradient shape " + shape_str(g.shape) +
                              " does not match parameter '" + name + "' " + shape_str(tensor.shape));

        Tensor& p = probe[name];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double saved = p.data[i];
            p.data[i] = saved + eps;
            double f_plus = objective(probe);
            p.data[i] = saved - eps;
            double f_minus = objective(probe);
            p.data[i] = saved;
            if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                throw numeric_error("grad_check: objective is not finite near parameter '" + name + "'");

            double numeric = (f_plus - f_minus) / (2.0 * eps);
            double analytic_v = g.data[i];
            double denom = std::max({std::fabs(analytic_v), std::fabs(numeric), 1e-3});
            double rel = std::fabs(analytic_v - numeric) / denom;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_index = static_cast<int>(i);
                report.worst_analytic = analytic_v;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

} // namespace hashgen
