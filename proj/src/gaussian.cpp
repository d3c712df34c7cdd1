#include "phasebound/gaussian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace phasebound {

namespace {

constexpr double kEigTolerance = -1e-10;
constexpr double kDiagShift = 1e-14;

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

bool usable_factor(const Eigen::LLT<Eigen::MatrixXd>& llt, int d) {
    if (llt.info() != Eigen::Success) return false;
    const Eigen::MatrixXd l = llt.matrixL();
    for (int i = 0; i < d; ++i)
        if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
    return true;
}

} // namespace

GaussianNd::GaussianNd(Eigen::VectorXd mean, const Eigen::MatrixXd& cov)
    : mean_(std::move(mean)) {
    const int d = static_cast<int>(mean_.size());
    if (cov.rows() != d || cov.cols() != d)
        throw EstimatorError("GaussianNd: mean/cov dimension mismatch");
    cov_ = 0.5 * (cov + cov.transpose());

    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (!usable_factor(llt, d)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_, Eigen::EigenvaluesOnly);
        const double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < kEigTolerance) {
            std::ostringstream msg;
            msg << "GaussianNd: covariance is not PSD, smallest eigenvalue " << min_eig;
            throw EstimatorError(msg.str());
        }
        double shift = kDiagShift + std::max(0.0, -min_eig);
        for (int attempt = 0; attempt < 60; ++attempt) {
            llt.compute(cov_ + shift * Eigen::MatrixXd::Identity(d, d));
            if (usable_factor(llt, d)) break;
            shift *= 10.0;
        }
        if (!usable_factor(llt, d))
            throw EstimatorError("GaussianNd: covariance could not be factorized");
        regularized_ = true;
    }
    chol_ = llt.matrixL();
    log_norm_ = -0.5 * d * std::log(2.0 * M_PI);
    for (int i = 0; i < d; ++i) log_norm_ -= std::log(chol_(i, i));
}

double GaussianNd::log_density(const Eigen::VectorXd& x) const {
    Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
    return log_norm_ - 0.5 * w.squaredNorm();
}

Eigen::MatrixXd process_cov(const ArmaSpec& spec) {
    const int n = spec.order();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n + 1, n + 1);
    const double g2 = spec.gamma() * spec.gamma();
    q(0, 0) = g2;
    q(0, 1) = g2;
    q(1, 0) = g2;
    q(1, 1) = g2;
    return q;
}

GaussianNd propagate(const GaussianNd& g, const Eigen::MatrixXd& f, const Eigen::MatrixXd& q) {
    Eigen::VectorXd mean = f * g.mean();
    Eigen::MatrixXd cov = f * g.cov() * f.transpose() + q;
    return GaussianNd(std::move(mean), cov);
}

double folded_log_density(const GaussianNd& g, double phi, std::span<const double> reg,
                          int max_terms, bool* cap_hit) {
    const int d = g.dim();
    if (static_cast<int>(reg.size()) + 1 != d)
        throw EstimatorError("folded_log_density: state dimension mismatch");
    Eigen::VectorXd x(d);
    for (int i = 1; i < d; ++i) x(i) = reg[i - 1];

    const auto eval = [&](long l) {
        x(0) = phi + 2.0 * M_PI * static_cast<double>(l);
        return g.log_density(x);
    };

    const long l0 = std::lround((g.mean()(0) - phi) / (2.0 * M_PI));
    double acc = eval(l0);
    const double stop_gap = std::log(1e-12);
    for (int dir : {1, -1}) {
        for (int k = 1; k <= max_terms; ++k) {
            const double t = eval(l0 + static_cast<long>(dir) * k);
            acc = log_add_exp(acc, t);
            if (t - acc < stop_gap) break;
            if (k == max_terms && cap_hit != nullptr) *cap_hit = true;
        }
    }
    return acc;
}

double folded_log_density(const GaussianNd& g, const StateVector& s, int max_terms,
                          bool* cap_hit) {
    return folded_log_density(g, s.phi, s.reg, max_terms, cap_hit);
}

} // namespace phasebound
