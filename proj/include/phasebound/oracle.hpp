#pragma once

#include <cstdint>
#include <vector>

#include "phasebound/model.hpp"

namespace phasebound {
namespace oracle {

/// I(X;Y) in bits for y = x + w over the discrete alphabet, by 2-D Gauss-Hermite.
double awgn_mi_quadrature(const Constellation& cons, ChannelParams ch, int nodes = 96);

/// Same quantity by Monte Carlo averaging of log2(p(y|x)/p(y)).
double awgn_mi_monte_carlo(const Constellation& cons, ChannelParams ch, long n,
                           std::uint64_t seed);

/**
 * Compute the rate both ways and fail loudly if they disagree beyond
 * `tol` bits; returns the quadrature value.
 */
double awgn_mi_checked(const Constellation& cons, ChannelParams ch, long mc_n = 10000000,
                       std::uint64_t seed = 0x6f7261636c65ull, int nodes = 96,
                       double tol = 1e-3);

/**
 * @brief Quantized-phase auxiliary channel for first-order (random walk) phase noise.
 *
 * The transition kernel is circulant; entry d is the wrapped-Gaussian
 * increment mass integrated over the destination bin. Emissions are
 * evaluated at bin-center phases.
 */
struct TrellisGrid {
    int bins = 0;
    double gamma = 0.0;
    std::vector<double> kernel; // kernel[d]: mass of a circular shift by d bins
    std::vector<double> cos_bin;
    std::vector<double> sin_bin;

    double bin_width() const { return 2.0 * M_PI / bins; }
};

TrellisGrid build_trellis(double gamma, int bins);

struct TrellisRates {
    double h_y_bits = 0.0;
    double h_y_given_x_bits = 0.0;
    double rate_bits = 0.0; // difference of the two
    long n_used = 0;
};

/**
 * Forward-algorithm estimate of h(Y) and h(Y|X) for the auxiliary
 * quantized-phase channel, run on the given realization. The forward
 * variable is renormalized every step; the per-step normalizers are the
 * predictive likelihoods being averaged.
 */
TrellisRates trellis_forward(const TrellisGrid& grid, const Trace& trace,
                             const Constellation& cons, ChannelParams ch, long burn_in);

/**
 * Convenience wrapper: simulate a random-walk phase trace (H(z) = 1,
 * innovation deviation gamma) and run the forward recursions on it.
 */
TrellisRates trellis_rate(double gamma, const Constellation& cons, ChannelParams ch, int bins,
                          long n, std::uint64_t seed, long burn_in = 1000);

} // namespace oracle
} // namespace phasebound
