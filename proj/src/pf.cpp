#include "phasebound/pf.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "phasebound/rng.hpp"

namespace phasebound {

namespace {

constexpr std::uint64_t kResampleTag = 0x7265736D706Cull; // "resmpl"
constexpr int kMaxPoints = 64;

// Defensive innovation proposal: mostly the transition density, with a
// small widened component so that rare large frequency-noise excursions
// keep non-negligible particle coverage at high SNR. The importance
// ratio transition/proposal is folded back into the weights, so the
// filter stays exact for the original model.
constexpr double kDefensiveWeight = 0.05;
constexpr double kDefensiveScale = 5.0;

double defensive_log_ratio(double v, double gamma) {
    const double z = v / gamma;
    const double log_narrow = -0.5 * z * z - std::log(gamma);
    const double zw = z / kDefensiveScale;
    const double log_wide = -0.5 * zw * zw - std::log(gamma * kDefensiveScale);
    const double hi = std::max(log_narrow, log_wide);
    const double mix = hi + std::log((1.0 - kDefensiveWeight) * std::exp(log_narrow - hi) +
                                     kDefensiveWeight * std::exp(log_wide - hi));
    return log_narrow - mix;
}

// Normalized linear weights via max-shift; returns sum of squares.
double linear_weights(const std::vector<double>& log_w, std::vector<double>& w) {
    const std::size_t n = log_w.size();
    w.resize(n);
    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : log_w) max_lw = std::max(max_lw, lw);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(log_w[i] - max_lw);
        sum += w[i];
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] /= sum;
        sq += w[i] * w[i];
    }
    return sq;
}

} // namespace

StateVector ParticleSet::state(int i) const {
    StateVector s;
    s.phi = phi[i];
    s.reg.assign(reg.begin() + static_cast<std::size_t>(i) * order,
                 reg.begin() + static_cast<std::size_t>(i + 1) * order);
    return s;
}

double ParticleSet::ess() const {
    std::vector<double> w;
    return 1.0 / linear_weights(log_w, w);
}

ParticleSet pf_init(const ArmaSpec& spec, double known_phi1, int np, std::uint64_t seed) {
    if (np < 2) throw std::invalid_argument("pf_init: need at least 2 particles");
    const int order = spec.order();
    ParticleSet ps;
    ps.np = np;
    ps.order = order;
    ps.key = seed;
    ps.step = 0;
    const double phi0 = wrap_2pi(known_phi1);
    ps.phi.assign(np, phi0);
    ps.cphi.assign(np, std::cos(phi0));
    ps.sphi.assign(np, std::sin(phi0));
    ps.log_w.assign(np, -std::log(static_cast<double>(np)));
    ps.reg.resize(static_cast<std::size_t>(np) * order);

    Eigen::MatrixXd p = stationary_register_cov(spec);
    Eigen::LLT<Eigen::MatrixXd> llt(p + 1e-300 * Eigen::MatrixXd::Identity(order, order));
    Eigen::MatrixXd l = llt.matrixL();
    Rng rng(Rng::derive(seed, "pf.init"));
    Eigen::VectorXd z(order);
    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < order; ++j) z(j) = rng.normal();
        Eigen::VectorXd r = l * z;
        for (int j = 0; j < order; ++j) ps.reg[static_cast<std::size_t>(i) * order + j] = r(j);
    }
    return ps;
}

void systematic_resample(ParticleSet& ps, double u) {
    const int np = ps.np;
    std::vector<double> w;
    linear_weights(ps.log_w, w);

    std::vector<int> pick(np);
    double cum = w[0];
    int j = 0;
    for (int i = 0; i < np; ++i) {
        const double target = (u + i) / np;
        while (cum < target && j + 1 < np) cum += w[++j];
        pick[i] = j;
    }

    std::vector<double> phi(np), cphi(np), sphi(np);
    std::vector<double> reg(ps.reg.size());
    for (int i = 0; i < np; ++i) {
        const int s = pick[i];
        phi[i] = ps.phi[s];
        cphi[i] = ps.cphi[s];
        sphi[i] = ps.sphi[s];
        for (int k = 0; k < ps.order; ++k)
            reg[static_cast<std::size_t>(i) * ps.order + k] =
                ps.reg[static_cast<std::size_t>(s) * ps.order + k];
    }
    ps.phi = std::move(phi);
    ps.cphi = std::move(cphi);
    ps.sphi = std::move(sphi);
    ps.reg = std::move(reg);
    ps.log_w.assign(np, -std::log(static_cast<double>(np)));
}

PfStepResult pf_step(ParticleSet& ps, cplx y, std::optional<cplx> data_aided_x,
                     const ArmaSpec& spec, const Constellation& cons, ChannelParams ch) {
    const int np = ps.np;
    const int order = ps.order;
    const int m = cons.size();
    if (m > kMaxPoints) throw std::invalid_argument("pf_step: constellation too large");
    ps.step += 1;

    const double* a = spec.a().data();
    const double* b = spec.b().data();
    const double gamma = spec.gamma();
    const std::uint64_t step_key = Rng::derive(ps.key, static_cast<std::uint64_t>(ps.step));

    // Per-symbol constants of the log-likelihood
    //   log p_i - snr(|y|^2 + |x_i|^2) + 2 snr Re(conj(y) x_i e^{j phi}).
    double base[kMaxPoints], cr[kMaxPoints], ci[kMaxPoints];
    const double ynorm = std::norm(y);
    int terms = 0;
    if (data_aided_x) {
        const cplx c = std::conj(y) * (*data_aided_x);
        base[0] = -ch.snr * (ynorm + std::norm(*data_aided_x));
        cr[0] = 2.0 * ch.snr * c.real();
        ci[0] = 2.0 * ch.snr * c.imag();
        terms = 1;
    } else {
        for (int i = 0; i < m; ++i) {
            const cplx c = std::conj(y) * cons.points[i];
            base[i] = std::log(cons.priors[i]) - ch.snr * (ynorm + std::norm(cons.points[i]));
            cr[i] = 2.0 * ch.snr * c.real();
            ci[i] = 2.0 * ch.snr * c.imag();
        }
        terms = m;
    }
    const double log_gc_scale = std::log(ch.snr / M_PI);

    std::vector<double> loglike(np);
    double prop_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < np; ++i) {
        // Propagate through the state transition, defensive proposal on v.
        Rng prng(Rng::derive(step_key, static_cast<std::uint64_t>(i)));
        const bool wide = prng.uniform() < kDefensiveWeight;
        const double v = (wide ? kDefensiveScale * gamma : gamma) * prng.normal();
        ps.log_w[i] += defensive_log_ratio(v, gamma);
        if (ps.log_w[i] > prop_max) prop_max = ps.log_w[i];

        double* r = &ps.reg[static_cast<std::size_t>(i) * order];
        double omega = v;
        double lam_tail = 0.0;
        for (int k = 0; k < order; ++k) {
            omega += a[k] * r[k];
            lam_tail += b[k] * r[k];
        }
        const double new_phi = wrap_2pi(ps.phi[i] + omega + lam_tail);
        for (int k = order - 1; k > 0; --k) r[k] = r[k - 1];
        r[0] = omega;
        ps.phi[i] = new_phi;
        const double c = std::cos(new_phi);
        const double s = std::sin(new_phi);
        ps.cphi[i] = c;
        ps.sphi[i] = s;

        double ll;
        if (terms == 1) {
            ll = base[0] + cr[0] * c - ci[0] * s;
        } else {
            double tmax = -std::numeric_limits<double>::infinity();
            double t[kMaxPoints];
            for (int q = 0; q < terms; ++q) {
                t[q] = base[q] + cr[q] * c - ci[q] * s;
                if (t[q] > tmax) tmax = t[q];
            }
            double acc = 0.0;
            for (int q = 0; q < terms; ++q) acc += std::exp(t[q] - tmax);
            ll = tmax + std::log(acc);
        }
        loglike[i] = ll;
    }

    // Renormalize the proposal-corrected weights, then score the
    // predictive likelihood against the resulting mixture density.
    double prop_sum = 0.0;
    for (int i = 0; i < np; ++i) prop_sum += std::exp(ps.log_w[i] - prop_max);
    const double prop_norm = prop_max + std::log(prop_sum);

    double pred_max = -std::numeric_limits<double>::infinity();
    std::vector<double> pred(np); // corrected log weight + loglike per particle
    for (int i = 0; i < np; ++i) {
        ps.log_w[i] -= prop_norm;
        pred[i] = ps.log_w[i] + loglike[i];
        if (pred[i] > pred_max) pred_max = pred[i];
    }

    if (!std::isfinite(pred_max)) {
        std::ostringstream msg;
        msg << "particle depletion at step " << ps.step;
        throw EstimatorError(msg.str());
    }

    double pred_sum = 0.0;
    for (int i = 0; i < np; ++i) pred_sum += std::exp(pred[i] - pred_max);
    const double log_pred_like = log_gc_scale + pred_max + std::log(pred_sum);

    // Posterior weights, renormalized exactly.
    const double log_norm = pred_max + std::log(pred_sum);
    double sq = 0.0;
    for (int i = 0; i < np; ++i) {
        ps.log_w[i] = pred[i] - log_norm;
        const double w = std::exp(ps.log_w[i]);
        sq += w * w;
    }

    PfStepResult out{log_pred_like, false};
    if (1.0 / sq < 0.5 * np) {
        Rng rrng(Rng::derive(step_key, kResampleTag));
        systematic_resample(ps, rrng.uniform());
        out.resampled = true;
    }
    return out;
}

GaussianNd posterior_moments(const ParticleSet& ps) {
    const int np = ps.np;
    const int order = ps.order;
    std::vector<double> w;
    const double sq = linear_weights(ps.log_w, w);
    if (1.0 / sq < 2.0) throw EstimatorError("posterior_moments: ESS below 2");

    double res_c = 0.0, res_s = 0.0;
    for (int i = 0; i < np; ++i) {
        res_c += w[i] * ps.cphi[i];
        res_s += w[i] * ps.sphi[i];
    }
    if (std::hypot(res_c, res_s) < 1e-6)
        throw EstimatorError("posterior_moments: dispersed phase posterior");
    const double mean_dir = std::atan2(res_s, res_c);

    const int d = order + 1;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    std::vector<double> dphi(np);
    for (int i = 0; i < np; ++i) {
        double delta = std::remainder(ps.phi[i] - mean_dir, 2.0 * M_PI);
        if (delta <= -M_PI) delta += 2.0 * M_PI;
        dphi[i] = delta;
        mean(0) += w[i] * delta;
        const double* r = &ps.reg[static_cast<std::size_t>(i) * order];
        for (int k = 0; k < order; ++k) mean(1 + k) += w[i] * r[k];
    }
    mean(0) += mean_dir;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd z(d);
    for (int i = 0; i < np; ++i) {
        z(0) = mean_dir + dphi[i] - mean(0);
        const double* r = &ps.reg[static_cast<std::size_t>(i) * order];
        for (int k = 0; k < order; ++k) z(1 + k) = r[k] - mean(1 + k);
        cov.noalias() += w[i] * z * z.transpose();
    }
    mean(0) = wrap_2pi(mean(0));
    return GaussianNd(std::move(mean), cov);
}

} // namespace phasebound
