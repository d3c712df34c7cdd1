#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace phasebound {

/// Nodes and weights for integrals against exp(-t^2) on the real line.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    /// E[f(Z)] for Z ~ N(mean, sd^2): (1/sqrt(pi)) sum w_i f(mean + sqrt(2) sd t_i).
    template <typename F>
    double expect(double mean, double sd, F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            acc += weights[i] * f(mean + std::numbers::sqrt2 * sd * nodes[i]);
        return acc / std::sqrt(std::numbers::pi);
    }
};

/// Golub-Welsch rule of the given order (eigen-decomposition of the Jacobi matrix).
GaussHermite gauss_hermite(int order);

} // namespace phasebound
