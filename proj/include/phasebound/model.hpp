#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phasebound {

using cplx = std::complex<double>;

/// Raised by model/filter construction when an input violates a contract.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Wrap an angle to [0, 2*pi).
double wrap_2pi(double x);

/// One numerator factor (1 - coeff * z^-delay) of the shaping filter.
struct ZeroFactor {
    double coeff = 0.0;
    int delay = 1;
};

/**
 * @brief Frequency-noise shaping filter H(z) = (1 + sum b_k z^-k) / (1 - sum a_k z^-k).
 *
 * The innovation driving the filter is white Gaussian with standard
 * deviation gamma (radians). Tap vectors are zero-padded to a common
 * order N >= 1 and the denominator must have all roots strictly inside
 * the unit circle.
 */
class ArmaSpec {
public:
    ArmaSpec(std::vector<double> a_taps, std::vector<double> b_taps, double gamma);

    /// Expand factored zeros (1 - c z^-d) and first-order poles (1 - alpha z^-1).
    static ArmaSpec from_zero_pole(const std::vector<ZeroFactor>& zeros,
                                   const std::vector<double>& poles, double gamma);

    /// H(z) = 1 realized with N = 1 and zero taps; the phase becomes a random walk.
    static ArmaSpec wiener_emulation(double gamma);

    /// Second-order oscillator spectrum model used by the default experiments.
    static ArmaSpec sm_oscillator(double gamma);

    const std::vector<double>& a() const { return a_; }
    const std::vector<double>& b() const { return b_; }
    double gamma() const { return gamma_; }
    int order() const { return static_cast<int>(a_.size()); }

    /// Replace the innovation deviation, keeping the taps.
    ArmaSpec with_gamma(double gamma) const { return ArmaSpec(a_, b_, gamma); }

private:
    std::vector<double> a_;
    std::vector<double> b_;
    double gamma_;
};

/// State (phi, omega_{k-1}, ..., omega_{k-N}); phi always in [0, 2*pi).
struct StateVector {
    double phi = 0.0;
    std::vector<double> reg;

    StateVector() = default;
    StateVector(double phi_in, std::vector<double> reg_in)
        : phi(wrap_2pi(phi_in)), reg(std::move(reg_in)) {}

    Eigen::VectorXd to_vector() const;
};

/// Advance the state by one step with innovation v; wraps the phase.
StateVector step_state(const ArmaSpec& spec, const StateVector& s, double v);

/// State transition matrix F, (N+1) x (N+1).
Eigen::MatrixXd transition_matrix(const ArmaSpec& spec);

/// Stationary covariance of the register (omega) part, N x N.
Eigen::MatrixXd stationary_register_cov(const ArmaSpec& spec);

/// Discrete channel input alphabet with priors.
struct Constellation {
    std::vector<cplx> points;
    std::vector<double> priors;

    Constellation(std::vector<cplx> pts, std::vector<double> pri);

    static Constellation qam4();
    static Constellation qam16();
    static Constellation from_name(const std::string& name);

    int size() const { return static_cast<int>(points.size()); }
    double mean_energy() const;
    cplx mean() const;
    /// H(X) = -sum p log2 p in bits.
    double source_entropy_bits() const;
};

struct ChannelParams {
    double snr; // linear; complex noise has two-dimensional variance 1/snr

    explicit ChannelParams(double snr_linear);
    static ChannelParams from_db(double snr_db);
};

/// A joint realization (x_1^n, s_1^{n+1}, y_1^n).
struct Trace {
    long n = 0;
    std::vector<cplx> x;
    std::vector<StateVector> s; // length n+1
    std::vector<cplx> y;
    std::uint64_t seed = 0;
};

/**
 * Generate a joint realization. phi_1 is uniform on [0, 2*pi), the
 * register starts from its stationary distribution, and the whole trace
 * is a pure function of (spec, constellation, channel, n, seed).
 */
Trace generate_trace(const ArmaSpec& spec, const Constellation& cons, ChannelParams ch,
                     long n, std::uint64_t seed);

/// p(y | x, phi) = (snr/pi) exp(-snr |y - x e^{j phi}|^2).
double data_aided_likelihood(cplx y, cplx x, double phi, ChannelParams ch);
double log_data_aided_likelihood(cplx y, cplx x, double phi, ChannelParams ch);

/// p(y | phi) = sum_x p(x) p(y | x, phi); evaluated in the log domain.
double blind_likelihood(cplx y, double phi, const Constellation& cons, ChannelParams ch);
double log_blind_likelihood(cplx y, double phi, const Constellation& cons, ChannelParams ch);

} // namespace phasebound
