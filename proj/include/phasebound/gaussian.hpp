#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "phasebound/model.hpp"

namespace phasebound {

/// Raised by density evaluation and tracking code on numerical failure.
class EstimatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Immutable multivariate Gaussian with a cached Cholesky factor.
 *
 * The covariance is re-symmetrized on construction. Eigenvalues below
 * -1e-10 are rejected; a covariance that is merely singular to round-off
 * is lifted by a 1e-14 diagonal shift before factorization so that
 * log_density stays defined at near-deterministic posteriors.
 */
class GaussianNd {
public:
    GaussianNd(Eigen::VectorXd mean, const Eigen::MatrixXd& cov);

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    int dim() const { return static_cast<int>(mean_.size()); }
    bool regularized() const { return regularized_; }

    double log_density(const Eigen::VectorXd& x) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd chol_; // lower factor of the (possibly shifted) covariance
    double log_norm_ = 0.0; // -(d/2) log(2 pi) - sum log L_ii
    bool regularized_ = false;
};

/// Process noise covariance of the state: gamma^2 on the top-left 2x2 block.
Eigen::MatrixXd process_cov(const ArmaSpec& spec);

/// Moments of F s + noise(Q) for s ~ g: (F mu, F Sigma F^T + Q), re-symmetrized.
GaussianNd propagate(const GaussianNd& g, const Eigen::MatrixXd& f, const Eigen::MatrixXd& q);

/**
 * log of sum_l g(mu, Sigma; (phi + 2 l pi, reg)): the density of the state
 * with the phase coordinate wrapped to [0, 2*pi).
 *
 * The sum starts at the translate closest to the mean phase and expands
 * outward until the next term contributes less than 1e-12 relatively;
 * `max_terms` caps the expansion per direction (cap hits are reported
 * through `cap_hit` when given).
 */
double folded_log_density(const GaussianNd& g, double phi, std::span<const double> reg,
                          int max_terms = 16, bool* cap_hit = nullptr);
double folded_log_density(const GaussianNd& g, const StateVector& s,
                          int max_terms = 16, bool* cap_hit = nullptr);

/// Gaussian over (phi, register) with the phase coordinate wrapped.
class FoldedGaussian {
public:
    /// truncation < 0 selects adaptive expansion with the default cap.
    explicit FoldedGaussian(GaussianNd base, int truncation = -1)
        : base_(std::move(base)), truncation_(truncation) {}

    const GaussianNd& base() const { return base_; }

    double log_density(const StateVector& s, bool* cap_hit = nullptr) const {
        const int cap = truncation_ < 0 ? 16 : truncation_;
        return folded_log_density(base_, s.phi, s.reg, cap, cap_hit);
    }

private:
    GaussianNd base_;
    int truncation_;
};

} // namespace phasebound
