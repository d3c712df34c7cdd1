#include "phasebound/bounds.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <vector>

#include "phasebound/ekf.hpp"
#include "phasebound/gaussian.hpp"
#include "phasebound/pf.hpp"
#include "phasebound/quadrature.hpp"
#include "phasebound/rng.hpp"

namespace phasebound {

namespace {

constexpr double kLog2e = 1.4426950408889634; // 1/ln 2

struct StepError : EstimatorError {
    using EstimatorError::EstimatorError;
};

[[noreturn]] void rethrow_with_step(const EstimatorError& err, long k) {
    std::ostringstream msg;
    msg << err.what() << " (at step " << k << ")";
    throw StepError(msg.str());
}

std::size_t true_index(const Constellation& cons, cplx x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cons.points.size(); ++i) {
        if (cons.points[i] == x) return i; // trace symbols are exact copies
        const double d = std::norm(cons.points[i] - x);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// Data-aided tracker: consumes (y_k, x_k), exposes the posterior moments.
class Tracker {
public:
    virtual ~Tracker() = default;
    virtual GaussianNd update(cplx y, cplx x) = 0;
};

class KalmanTracker : public Tracker {
public:
    KalmanTracker(const ArmaSpec& spec, ChannelParams ch, double phi1)
        : spec_(spec), ch_(ch), state_(ekf_init(spec, phi1)) {}

    GaussianNd update(cplx y, cplx x) override {
        if (state_.k > 0) state_ = ekf_predict(state_, spec_);
        state_ = ekf_update(state_, y, x, ch_);
        return state_.moments;
    }

private:
    ArmaSpec spec_;
    ChannelParams ch_;
    EkfState state_;
};

class ParticleTracker : public Tracker {
public:
    ParticleTracker(const ArmaSpec& spec, const Constellation& cons, ChannelParams ch,
                    double phi1, int np, std::uint64_t seed)
        : spec_(spec), cons_(cons), ch_(ch), ps_(pf_init(spec, phi1, np, seed)) {}

    GaussianNd update(cplx y, cplx x) override {
        pf_step(ps_, y, x, spec_, cons_, ch_);
        return posterior_moments(ps_);
    }

private:
    ArmaSpec spec_;
    Constellation cons_;
    ChannelParams ch_;
    ParticleSet ps_;
};

} // namespace

TrackerChoice TrackerChoice::particle(int np) {
    if (np < 2) throw std::invalid_argument("TrackerChoice: particle count must be >= 2");
    return {Kind::particle, np};
}

std::string TrackerChoice::name() const {
    if (kind == Kind::kalman) return "kalman";
    return "particle:" + std::to_string(np);
}

TrackerChoice TrackerChoice::parse(const std::string& text) {
    if (text == "kalman") return kalman();
    if (text == "particle") return particle(4096);
    if (text.rfind("particle:", 0) == 0) {
        const std::string arg = text.substr(9);
        std::size_t pos = 0;
        int np = 0;
        try {
            np = std::stoi(arg, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != arg.size() || np < 2)
            throw std::invalid_argument("TrackerChoice: bad particle count in '" + text + "'");
        return particle(np);
    }
    throw std::invalid_argument("TrackerChoice: unknown tracker '" + text +
                                "' (expected kalman or particle[:N])");
}

BatchStats batch_means(std::span<const double> samples, long batch) {
    if (batch < 1) throw std::invalid_argument("batch_means: batch must be >= 1");
    const long nb = static_cast<long>(samples.size()) / batch;
    if (nb < 10) {
        std::ostringstream msg;
        msg << "insufficient samples: " << samples.size() << " after burn-in, need at least "
            << 10 * batch;
        throw EstimatorError(msg.str());
    }
    const long m = nb * batch;
    double grand = 0.0;
    for (long i = 0; i < m; ++i) grand += samples[i];
    grand /= static_cast<double>(m);

    double ss = 0.0;
    for (long bi = 0; bi < nb; ++bi) {
        double bm = 0.0;
        for (long i = bi * batch; i < (bi + 1) * batch; ++i) bm += samples[i];
        bm /= static_cast<double>(batch);
        ss += (bm - grand) * (bm - grand);
    }
    BatchStats out;
    out.mean = grand;
    out.se = std::sqrt(ss / (static_cast<double>(nb) * (nb - 1)));
    out.n_used = m;
    return out;
}

double h_y_given_xs_bits(ChannelParams ch) {
    return std::log2(M_PI * M_E / ch.snr);
}

BoundEstimate upper_bound(const Trace& trace, const ArmaSpec& spec, const Constellation& cons,
                          ChannelParams ch, const UbOptions& opts) {
    const long n = trace.n;
    if (opts.burn_in < 0 || opts.burn_in >= n)
        throw std::invalid_argument("upper_bound: burn_in must be in [0, n)");
    const double phi1 = trace.s[0].phi;

    // Pass 1: blind particle filter for -log2 p_hat(y_k | y_1^{k-1}).
    std::vector<double> h_y_bits(n);
    {
        ParticleSet ps =
            pf_init(spec, phi1, opts.np_blind, Rng::derive(opts.seed, "ub.blind"));
        for (long k = 1; k <= n; ++k) {
            try {
                const PfStepResult r = pf_step(ps, trace.y[k - 1], std::nullopt, spec, cons, ch);
                h_y_bits[k - 1] = -r.log_pred_like * kLog2e;
            } catch (const EstimatorError& err) {
                rethrow_with_step(err, k);
            }
        }
    }

    // Pass 2: data-aided tracker and the folded-density difference term.
    std::vector<double> d_bits(n);
    long fold_hits = 0;
    {
        std::unique_ptr<Tracker> tracker;
        if (opts.tracker.kind == TrackerChoice::Kind::kalman) {
            tracker = std::make_unique<KalmanTracker>(spec, ch, phi1);
        } else {
            tracker = std::make_unique<ParticleTracker>(
                spec, cons, ch, phi1, opts.tracker.np, Rng::derive(opts.seed, "ub.tracker"));
        }
        const Eigen::MatrixXd f = transition_matrix(spec);
        const Eigen::MatrixXd q = process_cov(spec);
        for (long k = 1; k <= n; ++k) {
            try {
                const GaussianNd post = tracker->update(trace.y[k - 1], trace.x[k - 1]);
                if (k <= opts.burn_in) continue;
                const GaussianNd pred = propagate(post, f, q);
                bool cap = false;
                const double lq_post =
                    folded_log_density(post, trace.s[k - 1], opts.fold_cap, &cap);
                const double lq_pred = folded_log_density(pred, trace.s[k], opts.fold_cap, &cap);
                if (cap) ++fold_hits;
                d_bits[k - 1] = (lq_pred - lq_post) * kLog2e;
            } catch (const StepError&) {
                throw;
            } catch (const EstimatorError& err) {
                rethrow_with_step(err, k);
            }
        }
    }

    const double noise_bits = h_y_given_xs_bits(ch);
    std::vector<double> per_sample(n - opts.burn_in);
    for (long k = opts.burn_in + 1; k <= n; ++k)
        per_sample[k - opts.burn_in - 1] = h_y_bits[k - 1] - noise_bits + d_bits[k - 1];

    const BatchStats stats = batch_means(per_sample, opts.batch);
    BoundEstimate out;
    out.value = stats.mean;
    out.se = stats.se;
    out.n_used = stats.n_used;
    out.fold_cap_hits = fold_hits;

    double hy = 0.0, dd = 0.0;
    for (long i = 0; i < stats.n_used; ++i) {
        hy += h_y_bits[opts.burn_in + i];
        dd += d_bits[opts.burn_in + i];
    }
    out.components.h_y = hy / static_cast<double>(stats.n_used);
    out.components.d_term = dd / static_cast<double>(stats.n_used);
    out.components.h_y_given_xs = noise_bits;
    return out;
}

BoundEstimate lower_bound(const Trace& trace, const ArmaSpec& spec, const Constellation& cons,
                          ChannelParams ch, const LbOptions& opts) {
    const long n = trace.n;
    if (opts.quad_nodes < 8) throw std::invalid_argument("lower_bound: quad_nodes must be >= 8");
    if (opts.burn_in < 0 || opts.burn_in >= n)
        throw std::invalid_argument("lower_bound: burn_in must be in [0, n)");
    const int m = cons.size();
    const GaussHermite gh = gauss_hermite(opts.quad_nodes);
    const int nodes = opts.quad_nodes;

    std::vector<double> log_w_node(nodes); // log(w_j / sqrt(pi))
    for (int j = 0; j < nodes; ++j)
        log_w_node[j] = std::log(gh.weights[j]) - 0.5 * std::log(M_PI);

    std::vector<double> log_prior(m), xnorm(m);
    for (int i = 0; i < m; ++i) {
        log_prior[i] = std::log(cons.priors[i]);
        xnorm[i] = std::norm(cons.points[i]);
    }

    std::vector<double> cos_node(nodes), sin_node(nodes), node_term(nodes), log_l(m);
    std::vector<double> hxy_bits(n);
    long collapses = 0;

    EkfState state = ekf_init(spec, trace.s[0].phi);
    for (long k = 1; k <= n; ++k) {
        try {
            if (k > 1) state = ekf_predict(state, spec);
            const double mu_phi = state.moments.mean()(0);
            const double sd_phi = std::sqrt(std::max(state.moments.cov()(0, 0), 0.0));
            const cplx y = trace.y[k - 1];
            const double ynorm = std::norm(y);

            for (int j = 0; j < nodes; ++j) {
                const double phi = mu_phi + std::numbers::sqrt2 * sd_phi * gh.nodes[j];
                cos_node[j] = std::cos(phi);
                sin_node[j] = std::sin(phi);
            }
            const std::size_t ti = true_index(cons, trace.x[k - 1]);
            // log L(x_i) = log p_i + log sum_j (w_j/sqrt(pi)) g_c(x_i e^{j phi_j}; y)
            for (int i = 0; i < m; ++i) {
                const cplx c = std::conj(y) * cons.points[i];
                double tmax = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < nodes; ++j) {
                    node_term[j] = log_w_node[j] - ch.snr * (ynorm + xnorm[i]) +
                                   2.0 * ch.snr * (c.real() * cos_node[j] - c.imag() * sin_node[j]);
                    tmax = std::max(tmax, node_term[j]);
                }
                double acc = 0.0;
                for (int j = 0; j < nodes; ++j) acc += std::exp(node_term[j] - tmax);
                log_l[i] = log_prior[i] + tmax + std::log(acc);
                if (i == static_cast<int>(ti) && nodes > 1 && acc == 1.0) ++collapses;
            }

            double lmax = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) lmax = std::max(lmax, log_l[i]);
            double lsum = 0.0;
            for (int i = 0; i < m; ++i) lsum += std::exp(log_l[i] - lmax);
            hxy_bits[k - 1] = -(log_l[ti] - lmax - std::log(lsum)) * kLog2e;

            state = ekf_update(state, y, trace.x[k - 1], ch);
        } catch (const EstimatorError& err) {
            rethrow_with_step(err, k);
        }
    }

    const BatchStats stats =
        batch_means(std::span<const double>(hxy_bits).subspan(opts.burn_in), opts.batch);
    BoundEstimate out;
    out.components.hx = cons.source_entropy_bits();
    out.components.hx_given_y = stats.mean;
    out.value = out.components.hx - stats.mean;
    out.se = stats.se;
    out.n_used = stats.n_used;
    out.quad_collapses = collapses;
    return out;
}

} // namespace phasebound
