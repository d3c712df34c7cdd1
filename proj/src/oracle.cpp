#include "phasebound/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include <fftw3.h>

#include "phasebound/gaussian.hpp"
#include "phasebound/quadrature.hpp"
#include "phasebound/rng.hpp"

namespace phasebound {
namespace oracle {

namespace {

constexpr double kLog2e = 1.4426950408889634;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// log sum_x p(x) exp(-snr |y - x|^2), i.e. log p(y) without the (snr/pi) factor.
double log_mix_exponent(const Constellation& cons, ChannelParams ch, cplx y) {
    double tmax = -std::numeric_limits<double>::infinity();
    const int m = cons.size();
    std::vector<double> t(m);
    for (int i = 0; i < m; ++i) {
        t[i] = std::log(cons.priors[i]) - ch.snr * std::norm(y - cons.points[i]);
        tmax = std::max(tmax, t[i]);
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += std::exp(t[i] - tmax);
    return tmax + std::log(acc);
}

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

// One-kernel circular convolver via FFTW r2c/c2r.
class CirculantConvolver {
public:
    CirculantConvolver(const std::vector<double>& kernel, int n) : n_(n), nc_(n / 2 + 1) {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        in_ = fftw_alloc_real(n_);
        spec_ = fftw_alloc_complex(nc_);
        kspec_ = fftw_alloc_complex(nc_);
        fwd_ = fftw_plan_dft_r2c_1d(n_, in_, spec_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_1d(n_, spec_, in_, FFTW_ESTIMATE);
        for (int i = 0; i < n_; ++i) in_[i] = kernel[i];
        fftw_execute(fwd_);
        for (int i = 0; i < nc_; ++i) {
            kspec_[i][0] = spec_[i][0];
            kspec_[i][1] = spec_[i][1];
        }
    }

    ~CirculantConvolver() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(in_);
        fftw_free(spec_);
        fftw_free(kspec_);
    }

    CirculantConvolver(const CirculantConvolver&) = delete;
    CirculantConvolver& operator=(const CirculantConvolver&) = delete;

    void apply(std::vector<double>& v) {
        for (int i = 0; i < n_; ++i) in_[i] = v[i];
        fftw_execute(fwd_);
        for (int i = 0; i < nc_; ++i) {
            const double re = spec_[i][0] * kspec_[i][0] - spec_[i][1] * kspec_[i][1];
            const double im = spec_[i][0] * kspec_[i][1] + spec_[i][1] * kspec_[i][0];
            spec_[i][0] = re;
            spec_[i][1] = im;
        }
        fftw_execute(inv_);
        const double scale = 1.0 / n_;
        for (int i = 0; i < n_; ++i) v[i] = std::max(0.0, in_[i] * scale);
    }

private:
    int n_;
    int nc_;
    double* in_;
    fftw_complex* spec_;
    fftw_complex* kspec_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

} // namespace

double awgn_mi_quadrature(const Constellation& cons, ChannelParams ch, int nodes) {
    const GaussHermite gh = gauss_hermite(nodes);
    const double sigma = std::sqrt(1.0 / ch.snr); // sqrt(2) * per-dimension deviation
    double mi = 0.0;
    for (int xi = 0; xi < cons.size(); ++xi) {
        const cplx x = cons.points[xi];
        double inner = 0.0;
        for (int i = 0; i < nodes; ++i) {
            for (int j = 0; j < nodes; ++j) {
                const cplx y = x + sigma * cplx(gh.nodes[i], gh.nodes[j]);
                const double t2 = gh.nodes[i] * gh.nodes[i] + gh.nodes[j] * gh.nodes[j];
                const double val = -t2 * kLog2e - log_mix_exponent(cons, ch, y) * kLog2e;
                inner += gh.weights[i] * gh.weights[j] * val;
            }
        }
        mi += cons.priors[xi] * inner / M_PI;
    }
    return mi;
}

double awgn_mi_monte_carlo(const Constellation& cons, ChannelParams ch, long n,
                           std::uint64_t seed) {
    Rng rng_x(Rng::derive(seed, "awgn_mi.x"));
    Rng rng_w(Rng::derive(seed, "awgn_mi.w"));
    std::vector<double> cdf(cons.priors.size());
    std::partial_sum(cons.priors.begin(), cons.priors.end(), cdf.begin());
    const double noise_scale = std::sqrt(0.5 / ch.snr);
    double acc = 0.0;
    for (long k = 0; k < n; ++k) {
        const double u = rng_x.uniform();
        std::size_t idx = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
        if (idx >= cons.points.size()) idx = cons.points.size() - 1;
        const cplx w(noise_scale * rng_w.normal(), noise_scale * rng_w.normal());
        const cplx y = cons.points[idx] + w;
        acc += -ch.snr * std::norm(w) * kLog2e - log_mix_exponent(cons, ch, y) * kLog2e;
    }
    return acc / static_cast<double>(n);
}

double awgn_mi_checked(const Constellation& cons, ChannelParams ch, long mc_n,
                       std::uint64_t seed, int nodes, double tol) {
    const double quad = awgn_mi_quadrature(cons, ch, nodes);
    const double mc = awgn_mi_monte_carlo(cons, ch, mc_n, seed);
    if (std::abs(quad - mc) > tol) {
        std::ostringstream msg;
        msg << "awgn_mi self-inconsistency: quadrature " << quad << " vs monte-carlo " << mc
            << " (|diff| > " << tol << " bits)";
        throw EstimatorError(msg.str());
    }
    return quad;
}

TrellisGrid build_trellis(double gamma, int bins) {
    if (bins < 64) throw std::invalid_argument("build_trellis: need at least 64 bins");
    if (!(gamma > 0.0)) throw std::invalid_argument("build_trellis: gamma must be > 0");
    TrellisGrid grid;
    grid.bins = bins;
    grid.gamma = gamma;
    grid.kernel.assign(bins, 0.0);
    const double width = 2.0 * M_PI / bins;
    const int wraps = 1 + static_cast<int>(std::ceil(6.0 * gamma / (2.0 * M_PI)));
    double total = 0.0;
    for (int d = 0; d < bins; ++d) {
        int ds = d <= bins / 2 ? d : d - bins; // signed circular offset
        double mass = 0.0;
        for (int l = -wraps; l <= wraps; ++l) {
            const double lo = (ds - 0.5) * width + 2.0 * M_PI * l;
            const double hi = (ds + 0.5) * width + 2.0 * M_PI * l;
            mass += std_normal_cdf(hi / gamma) - std_normal_cdf(lo / gamma);
        }
        grid.kernel[d] = mass;
        total += mass;
    }
    for (double& v : grid.kernel) v /= total;

    grid.cos_bin.resize(bins);
    grid.sin_bin.resize(bins);
    for (int j = 0; j < bins; ++j) {
        const double theta = (j + 0.5) * width;
        grid.cos_bin[j] = std::cos(theta);
        grid.sin_bin[j] = std::sin(theta);
    }
    return grid;
}

TrellisRates trellis_forward(const TrellisGrid& grid, const Trace& trace,
                             const Constellation& cons, ChannelParams ch, long burn_in) {
    const int bins = grid.bins;
    const int m = cons.size();
    const long n = trace.n;
    if (burn_in < 0 || burn_in >= n)
        throw std::invalid_argument("trellis_forward: burn_in must be in [0, n)");

    CirculantConvolver conv(grid.kernel, bins);

    // Initial forward variable: the known phi_1 bin.
    std::vector<double> alpha_init(bins, 0.0);
    {
        int b0 = static_cast<int>(std::floor(trace.s[0].phi / grid.bin_width()));
        if (b0 >= bins) b0 = bins - 1;
        alpha_init[b0] = 1.0;
    }

    std::vector<double> base(m), cr(m), ci(m);
    std::vector<double> args(static_cast<std::size_t>(bins) * m);
    std::vector<double> emission(bins);

    // One forward pass; aided == true conditions the emissions on x_k.
    const auto run = [&](bool aided) {
        std::vector<double> alpha = alpha_init;
        double acc_bits = 0.0;
        for (long k = 1; k <= n; ++k) {
            if (k > 1) {
                conv.apply(alpha);
                double s = 0.0;
                for (double v : alpha) s += v;
                if (s <= 0.0)
                    throw EstimatorError("trellis_forward: forward recursion underflow");
                for (double& v : alpha) v /= s;
            }
            const cplx y = trace.y[k - 1];
            const double ynorm = std::norm(y);
            int terms;
            if (aided) {
                const cplx c = std::conj(y) * trace.x[k - 1];
                base[0] = -ch.snr * (ynorm + std::norm(trace.x[k - 1]));
                cr[0] = 2.0 * ch.snr * c.real();
                ci[0] = 2.0 * ch.snr * c.imag();
                terms = 1;
            } else {
                for (int i = 0; i < m; ++i) {
                    const cplx c = std::conj(y) * cons.points[i];
                    base[i] =
                        std::log(cons.priors[i]) - ch.snr * (ynorm + std::norm(cons.points[i]));
                    cr[i] = 2.0 * ch.snr * c.real();
                    ci[i] = 2.0 * ch.snr * c.imag();
                }
                terms = m;
            }
            double gmax = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < bins; ++j) {
                for (int q = 0; q < terms; ++q) {
                    const double arg =
                        base[q] + cr[q] * grid.cos_bin[j] - ci[q] * grid.sin_bin[j];
                    args[static_cast<std::size_t>(j) * terms + q] = arg;
                    gmax = std::max(gmax, arg);
                }
            }
            double norm = 0.0;
            for (int j = 0; j < bins; ++j) {
                double e = 0.0;
                for (int q = 0; q < terms; ++q)
                    e += std::exp(args[static_cast<std::size_t>(j) * terms + q] - gmax);
                emission[j] = e;
                norm += alpha[j] * e;
            }
            if (norm <= 0.0 || !std::isfinite(norm)) {
                std::ostringstream msg;
                msg << "trellis_forward: forward recursion underflow at step " << k;
                throw EstimatorError(msg.str());
            }
            // log c_k = log(snr/pi) + gmax + log norm
            if (k > burn_in)
                acc_bits -= (std::log(ch.snr / M_PI) + gmax + std::log(norm)) * kLog2e;
            for (int j = 0; j < bins; ++j) alpha[j] = alpha[j] * emission[j] / norm;
        }
        return acc_bits / static_cast<double>(n - burn_in);
    };

    TrellisRates out;
    out.h_y_bits = run(false);
    out.h_y_given_x_bits = run(true);
    out.rate_bits = out.h_y_bits - out.h_y_given_x_bits;
    out.n_used = n - burn_in;
    return out;
}

TrellisRates trellis_rate(double gamma, const Constellation& cons, ChannelParams ch, int bins,
                          long n, std::uint64_t seed, long burn_in) {
    const ArmaSpec spec = ArmaSpec::wiener_emulation(gamma);
    const Trace trace = generate_trace(spec, cons, ch, n, seed);
    return trellis_forward(build_trellis(gamma, bins), trace, cons, ch, burn_in);
}

} // namespace oracle
} // namespace phasebound
