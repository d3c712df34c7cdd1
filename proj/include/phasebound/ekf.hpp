#pragma once

#include "phasebound/gaussian.hpp"
#include "phasebound/model.hpp"

namespace phasebound {

/**
 * @brief Data-aided linearized Kalman filter over the (N+1)-dimensional state.
 *
 * The measurement y = x e^{j phi} + w is treated as a 2-vector (Re, Im)
 * and linearized at the predicted mean phase. The mean phase is wrapped
 * to [0, 2*pi) after every step; the covariance is untouched by wrapping.
 */
struct EkfState {
    GaussianNd moments;
    long k = 0; // measurements incorporated so far
};

/// Prior for s_1: mean (phi_1, 0), covariance diag(phi_var0, stationary register cov).
EkfState ekf_init(const ArmaSpec& spec, double known_phi1, double phi_var0 = 1e-4);

/// Time update through the state transition; k is unchanged.
EkfState ekf_predict(const EkfState& e, const ArmaSpec& spec);

/// Measurement update with known symbol x; Joseph-form covariance update.
EkfState ekf_update(const EkfState& e, cplx y, cplx x, ChannelParams ch);

} // namespace phasebound
