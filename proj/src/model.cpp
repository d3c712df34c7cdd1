#include "phasebound/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "phasebound/rng.hpp"

namespace phasebound {

double wrap_2pi(double x) {
    double r = x - 2.0 * M_PI * std::floor(x / (2.0 * M_PI));
    if (r >= 2.0 * M_PI) r -= 2.0 * M_PI;
    if (r < 0.0) r = 0.0;
    return r;
}

namespace {

// Roots of 1 - sum a_k z^-k, i.e. eigenvalues of the companion matrix of
// w^N - a_1 w^{N-1} - ... - a_N with w = z.
std::vector<std::complex<double>> denominator_roots(const std::vector<double>& a) {
    const int n = static_cast<int>(a.size());
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) companion(0, i) = a[i];
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = es.eigenvalues()(i);
    return roots;
}

// Multiply polynomial p (coefficients of z^0, z^-1, ...) by (1 - c z^-d).
std::vector<double> mul_factor(const std::vector<double>& p, double c, int d) {
    std::vector<double> out(p.size() + d, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        out[i] += p[i];
        out[i + d] -= c * p[i];
    }
    return out;
}

} // namespace

ArmaSpec::ArmaSpec(std::vector<double> a_taps, std::vector<double> b_taps, double gamma)
    : a_(std::move(a_taps)), b_(std::move(b_taps)), gamma_(gamma) {
    if (!(gamma_ > 0.0)) throw ModelError("ArmaSpec: gamma must be > 0");
    const std::size_t n = std::max(a_.size(), b_.size());
    if (n < 1) throw ModelError("ArmaSpec: filter order N must be >= 1 (got N=0)");
    a_.resize(n, 0.0);
    b_.resize(n, 0.0);
    for (const auto& root : denominator_roots(a_)) {
        if (std::abs(root) >= 1.0) {
            std::ostringstream msg;
            msg << "ArmaSpec: denominator root " << root.real();
            if (root.imag() != 0.0) msg << (root.imag() < 0 ? "" : "+") << root.imag() << "j";
            msg << " is not strictly inside the unit circle (|root|=" << std::abs(root) << ")";
            throw ModelError(msg.str());
        }
    }
}

ArmaSpec ArmaSpec::from_zero_pole(const std::vector<ZeroFactor>& zeros,
                                  const std::vector<double>& poles, double gamma) {
    for (double alpha : poles) {
        if (std::abs(alpha) >= 1.0) {
            std::ostringstream msg;
            msg << "ArmaSpec: pole " << alpha << " is not strictly inside the unit circle";
            throw ModelError(msg.str());
        }
    }
    std::vector<double> num{1.0};
    for (const auto& z : zeros) {
        if (z.delay < 1) throw ModelError("ArmaSpec: zero factor delay must be >= 1");
        num = mul_factor(num, z.coeff, z.delay);
    }
    std::vector<double> den{1.0};
    for (double alpha : poles) den = mul_factor(den, alpha, 1);

    // 1 + sum b_k z^-k  and  1 - sum a_k z^-k
    std::vector<double> b(num.begin() + 1, num.end());
    std::vector<double> a(den.size() - 1);
    for (std::size_t i = 1; i < den.size(); ++i) a[i - 1] = -den[i];
    return ArmaSpec(std::move(a), std::move(b), gamma);
}

ArmaSpec ArmaSpec::wiener_emulation(double gamma) {
    return from_zero_pole({ZeroFactor{0.0, 1}}, {0.0}, gamma);
}

ArmaSpec ArmaSpec::sm_oscillator(double gamma) {
    return from_zero_pole({ZeroFactor{0.9937, 1}, ZeroFactor{0.7286, 2}}, {0.9999}, gamma);
}

Eigen::VectorXd StateVector::to_vector() const {
    Eigen::VectorXd v(1 + reg.size());
    v(0) = phi;
    for (std::size_t i = 0; i < reg.size(); ++i) v(1 + i) = reg[i];
    return v;
}

StateVector step_state(const ArmaSpec& spec, const StateVector& s, double v) {
    const int n = spec.order();
    double omega = v;          // new register front: v + sum a_i omega_{k-i}
    double lambda_tail = 0.0;  // sum b_i omega_{k-i}
    for (int i = 0; i < n; ++i) {
        omega += spec.a()[i] * s.reg[i];
        lambda_tail += spec.b()[i] * s.reg[i];
    }
    StateVector out;
    out.phi = wrap_2pi(s.phi + omega + lambda_tail);
    out.reg.resize(n);
    out.reg[0] = omega;
    for (int i = 1; i < n; ++i) out.reg[i] = s.reg[i - 1];
    return out;
}

Eigen::MatrixXd transition_matrix(const ArmaSpec& spec) {
    const int n = spec.order();
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n + 1, n + 1);
    f(0, 0) = 1.0;
    for (int i = 0; i < n; ++i) {
        f(0, 1 + i) = spec.a()[i] + spec.b()[i];
        f(1, 1 + i) = spec.a()[i];
    }
    for (int i = 2; i <= n; ++i) f(i, i - 1) = 1.0;
    return f;
}

Eigen::MatrixXd stationary_register_cov(const ArmaSpec& spec) {
    const int n = spec.order();
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) comp(0, i) = spec.a()[i];
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    // Solve P = comp P comp^T + gamma^2 e1 e1^T by vectorization.
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n * n, n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    lhs(i + j * n, k + l * n) -= comp(i, k) * comp(j, l);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n * n);
    rhs(0) = spec.gamma() * spec.gamma();
    Eigen::VectorXd vec_p = lhs.partialPivLu().solve(rhs);
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) p(i, j) = vec_p(i + j * n);
    return 0.5 * (p + p.transpose());
}

Constellation::Constellation(std::vector<cplx> pts, std::vector<double> pri)
    : points(std::move(pts)), priors(std::move(pri)) {
    if (points.empty()) throw ModelError("Constellation: empty point set");
    if (points.size() != priors.size())
        throw ModelError("Constellation: points/priors size mismatch");
    double sum = std::accumulate(priors.begin(), priors.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) throw ModelError("Constellation: priors must sum to 1");
    for (double& p : priors) p /= sum;
}

Constellation Constellation::qam4() {
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<cplx> pts;
    for (double re : {-1.0, 1.0})
        for (double im : {-1.0, 1.0}) pts.emplace_back(re * s, im * s);
    return Constellation(pts, std::vector<double>(4, 0.25));
}

Constellation Constellation::qam16() {
    const double s = 1.0 / std::sqrt(10.0);
    std::vector<cplx> pts;
    for (double re : {-3.0, -1.0, 1.0, 3.0})
        for (double im : {-3.0, -1.0, 1.0, 3.0}) pts.emplace_back(re * s, im * s);
    return Constellation(pts, std::vector<double>(16, 1.0 / 16.0));
}

Constellation Constellation::from_name(const std::string& name) {
    if (name == "qam4") return qam4();
    if (name == "qam16") return qam16();
    throw ModelError("Constellation: unknown modulation '" + name + "' (expected qam4 or qam16)");
}

double Constellation::mean_energy() const {
    double e = 0.0;
    for (int i = 0; i < size(); ++i) e += priors[i] * std::norm(points[i]);
    return e;
}

cplx Constellation::mean() const {
    cplx m = 0.0;
    for (int i = 0; i < size(); ++i) m += priors[i] * points[i];
    return m;
}

double Constellation::source_entropy_bits() const {
    double h = 0.0;
    for (double p : priors)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

ChannelParams::ChannelParams(double snr_linear) : snr(snr_linear) {
    if (!(snr > 0.0)) throw ModelError("ChannelParams: snr must be > 0");
}

ChannelParams ChannelParams::from_db(double snr_db) {
    return ChannelParams(std::pow(10.0, snr_db / 10.0));
}

Trace generate_trace(const ArmaSpec& spec, const Constellation& cons, ChannelParams ch,
                     long n, std::uint64_t seed) {
    if (n < 1) throw ModelError("generate_trace: n must be >= 1");
    const int order = spec.order();

    Rng rng_x(Rng::derive(seed, "trace.x"));
    Rng rng_v(Rng::derive(seed, "trace.v"));
    Rng rng_w(Rng::derive(seed, "trace.w"));
    Rng rng_init(Rng::derive(seed, "trace.init"));

    Trace tr;
    tr.n = n;
    tr.seed = seed;
    tr.x.resize(n);
    tr.y.resize(n);
    tr.s.reserve(n + 1);

    // Initial state: uniform phase, register from the stationary law.
    StateVector s0;
    s0.phi = wrap_2pi(2.0 * M_PI * rng_init.uniform());
    s0.reg.resize(order);
    {
        Eigen::MatrixXd p = stationary_register_cov(spec);
        Eigen::LLT<Eigen::MatrixXd> llt(p + 1e-300 * Eigen::MatrixXd::Identity(order, order));
        Eigen::MatrixXd l = llt.matrixL();
        Eigen::VectorXd z(order);
        for (int i = 0; i < order; ++i) z(i) = rng_init.normal();
        Eigen::VectorXd r = l * z;
        for (int i = 0; i < order; ++i) s0.reg[i] = r(i);
    }
    tr.s.push_back(s0);

    // Symbols by inverse CDF over the priors.
    std::vector<double> cdf(cons.priors.size());
    std::partial_sum(cons.priors.begin(), cons.priors.end(), cdf.begin());
    for (long k = 0; k < n; ++k) {
        const double u = rng_x.uniform();
        std::size_t idx = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
        if (idx >= cons.points.size()) idx = cons.points.size() - 1;
        tr.x[k] = cons.points[idx];
    }

    const double noise_scale = std::sqrt(0.5 / ch.snr); // per real dimension
    for (long k = 0; k < n; ++k) {
        const StateVector& sk = tr.s.back();
        const cplx w(noise_scale * rng_w.normal(), noise_scale * rng_w.normal());
        tr.y[k] = tr.x[k] * std::polar(1.0, sk.phi) + w;
        tr.s.push_back(step_state(spec, sk, spec.gamma() * rng_v.normal()));
    }
    return tr;
}

double log_data_aided_likelihood(cplx y, cplx x, double phi, ChannelParams ch) {
    const double d2 = std::norm(y - x * std::polar(1.0, phi));
    return std::log(ch.snr / M_PI) - ch.snr * d2;
}

double data_aided_likelihood(cplx y, cplx x, double phi, ChannelParams ch) {
    return std::exp(log_data_aided_likelihood(y, x, phi, ch));
}

double log_blind_likelihood(cplx y, double phi, const Constellation& cons, ChannelParams ch) {
    const int m = cons.size();
    std::vector<double> t(m);
    double tmax = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        t[i] = std::log(cons.priors[i]) + log_data_aided_likelihood(y, cons.points[i], phi, ch);
        if (t[i] > tmax) tmax = t[i];
    }
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += std::exp(t[i] - tmax);
    return tmax + std::log(acc);
}

double blind_likelihood(cplx y, double phi, const Constellation& cons, ChannelParams ch) {
    return std::exp(log_blind_likelihood(y, phi, cons, ch));
}

} // namespace phasebound
