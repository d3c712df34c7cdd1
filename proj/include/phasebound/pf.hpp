#pragma once

#include <cstdint>
#include <optional>

#include "phasebound/gaussian.hpp"
#include "phasebound/model.hpp"

namespace phasebound {

/**
 * @brief Weighted particle cloud for bootstrap (SIR) phase tracking.
 *
 * Storage is flat for cache efficiency: reg is row-major np x order and
 * cphi/sphi cache cos/sin of each particle phase. log_w is kept
 * normalized so that sum(exp(log_w)) == 1. A set is owned by one
 * tracking task; per-particle randomness comes from counter-based
 * substreams keyed by (seed, step, particle).
 */
struct ParticleSet {
    int np = 0;
    int order = 0;
    std::vector<double> phi;
    std::vector<double> cphi;
    std::vector<double> sphi;
    std::vector<double> reg;   // np x order
    std::vector<double> log_w; // sum of exp == 1
    std::uint64_t key = 0;
    long step = 0;

    StateVector state(int i) const;
    /// Effective sample size 1 / sum(w_i^2).
    double ess() const;
};

/// Particles at the known initial phase, register from the stationary law.
ParticleSet pf_init(const ArmaSpec& spec, double known_phi1, int np, std::uint64_t seed);

struct PfStepResult {
    double log_pred_like = 0.0; // natural-log estimate of p(y_k | y_1^{k-1})
    bool resampled = false;
};

/**
 * One predict/weigh/resample step. Blind mode when data_aided_x is empty,
 * otherwise the likelihood conditions on the known symbol. The proposal
 * is the state transition with a small widened defensive component whose
 * importance ratio is folded back into the weights (keeping rare large
 * frequency-noise excursions covered at high SNR). The predictive
 * likelihood uses the corrected weights from before the measurement;
 * systematic resampling runs when ESS drops below np/2.
 */
PfStepResult pf_step(ParticleSet& ps, cplx y, std::optional<cplx> data_aided_x,
                     const ArmaSpec& spec, const Constellation& cons, ChannelParams ch);

/// Systematic resampling driven by one uniform; weights reset to 1/np.
void systematic_resample(ParticleSet& ps, double u);

/**
 * Circular-aware weighted moments: the mean phase is the argument of the
 * weighted resultant and every particle phase is re-expressed within pi
 * of it before the covariance is formed. Register coordinates use plain
 * weighted statistics.
 */
GaussianNd posterior_moments(const ParticleSet& ps);

} // namespace phasebound
