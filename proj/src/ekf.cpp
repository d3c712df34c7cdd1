#include "phasebound/ekf.hpp"

#include <cmath>

namespace phasebound {

EkfState ekf_init(const ArmaSpec& spec, double known_phi1, double phi_var0) {
    const int n = spec.order();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n + 1);
    mean(0) = wrap_2pi(known_phi1);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n + 1, n + 1);
    cov(0, 0) = phi_var0;
    cov.bottomRightCorner(n, n) = stationary_register_cov(spec);
    return EkfState{GaussianNd(std::move(mean), cov), 0};
}

EkfState ekf_predict(const EkfState& e, const ArmaSpec& spec) {
    GaussianNd g = propagate(e.moments, transition_matrix(spec), process_cov(spec));
    Eigen::VectorXd mean = g.mean();
    mean(0) = wrap_2pi(mean(0));
    return EkfState{GaussianNd(std::move(mean), g.cov()), e.k};
}

EkfState ekf_update(const EkfState& e, cplx y, cplx x, ChannelParams ch) {
    const int d = e.moments.dim();
    const double phi_hat = e.moments.mean()(0);
    const cplx pred = x * std::polar(1.0, phi_hat);

    // h(s) = (Re, Im) of x e^{j phi}; only the phase column is nonzero.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, d);
    h(0, 0) = -pred.imag();
    h(1, 0) = pred.real();

    const double r = 0.5 / ch.snr; // per-dimension measurement noise variance
    const Eigen::MatrixXd& p = e.moments.cov();
    Eigen::Matrix2d s_inn = h * p * h.transpose() + r * Eigen::Matrix2d::Identity();
    Eigen::MatrixXd gain = p * h.transpose() * s_inn.inverse();

    Eigen::Vector2d innov(y.real() - pred.real(), y.imag() - pred.imag());
    Eigen::VectorXd mean = e.moments.mean() + gain * innov;
    mean(0) = wrap_2pi(mean(0));

    Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(d, d) - gain * h;
    Eigen::MatrixXd cov = ikh * p * ikh.transpose() + r * gain * gain.transpose();
    return EkfState{GaussianNd(std::move(mean), cov), e.k + 1};
}

} // namespace phasebound
