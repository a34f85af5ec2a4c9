#pragma once

#include <Eigen/Dense>
#include <functional>

#include "scmbench/common.hpp"

namespace scmbench {

// Conditioning kernel for continuous models. A custom weight function
// (diff, bandwidth) -> weight takes precedence over the built-in kinds;
// weights must be nonnegative and 1 at diff = 0.
struct KernelConfig {
    KernelKind kind = KernelKind::Gaussian;
    double bandwidth = 0.1;
    std::function<double(const Eigen::VectorXd&, double)> custom;

    double weight(const Eigen::VectorXd& diff) const;
};

// Gaussian: exp(-||diff||^2 / (2 h^2)); Epsilon: 1 when ||diff||_inf <= h
// (boundary inclusive), else 0. Equivalent to a product of per-coordinate
// kernels evaluated at diff/h.
double kernel_weight(KernelKind kind, const Eigen::VectorXd& diff, double h);

}  // namespace scmbench
