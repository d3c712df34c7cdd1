#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "phasebound/model.hpp"

namespace phasebound {

/// Which data-aided tracker supplies the posterior moments (mu_k, Sigma_k).
struct TrackerChoice {
    enum class Kind { kalman, particle };
    Kind kind = Kind::kalman;
    int np = 4096;

    static TrackerChoice kalman() { return {Kind::kalman, 0}; }
    static TrackerChoice particle(int np);
    std::string name() const;
    static TrackerChoice parse(const std::string& text);
};

struct BoundComponents {
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
    double h_y = kUnset;          // bits/use, blind predictive entropy rate
    double h_y_given_xs = kUnset; // bits/use, channel noise entropy rate
    double d_term = kUnset;       // bits/use, posterior-vs-predictive state term
    double hx = kUnset;           // bits/use, source entropy
    double hx_given_y = kUnset;   // bits/use, demodulation conditional entropy
};

/// A rate estimate in bits/channel-use with Monte Carlo standard error.
struct BoundEstimate {
    double value = 0.0;
    double se = 0.0;
    long n_used = 0;
    BoundComponents components;
    long fold_cap_hits = 0;   // folded-density truncation cap reached
    long quad_collapses = 0;  // quadrature reduced to its max term
};

/// Mean and batch-means standard error of a correlated sample series.
struct BatchStats {
    double mean = 0.0;
    double se = 0.0;
    long n_used = 0;
};
BatchStats batch_means(std::span<const double> samples, long batch);

/// log2(pi e / snr): differential entropy rate of the channel noise, bits/use.
double h_y_given_xs_bits(ChannelParams ch);

struct UbOptions {
    TrackerChoice tracker = TrackerChoice::kalman();
    int np_blind = 4096;
    std::uint64_t seed = 0;
    long burn_in = 1000;
    long batch = 1000;
    int fold_cap = 16;
};

/**
 * Upper bound on I(X;Y): mean over the trace of
 *   -log2 p_hat(y_k | y_1^{k-1}) - log2(pi e / snr) + d_k,
 * where p_hat comes from the blind particle filter and
 *   d_k = log2 q_pred(s_{k+1}) - log2 q_post(s_k)
 * with folded Gaussians built from the data-aided tracker's posterior
 * and its one-step propagation (see docs/method.md for the derivation).
 */
BoundEstimate upper_bound(const Trace& trace, const ArmaSpec& spec, const Constellation& cons,
                          ChannelParams ch, const UbOptions& opts);

struct LbOptions {
    int quad_nodes = 32;
    long burn_in = 1000;
    long batch = 1000;
};

/**
 * Lower bound on I(X;Y): H(X) minus the mean of -log2 q(x_k | past, y_k),
 * where q integrates the data-aided predictive phase marginal against the
 * channel density by Gauss-Hermite quadrature and is normalized over the
 * alphabet. The tracker is the predictive Kalman filter on past symbols.
 */
BoundEstimate lower_bound(const Trace& trace, const ArmaSpec& spec, const Constellation& cons,
                          ChannelParams ch, const LbOptions& opts);

} // namespace phasebound
