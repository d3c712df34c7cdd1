#include "phasebound/selftest.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "phasebound/bounds.hpp"
#include "phasebound/gaussian.hpp"
#include "phasebound/model.hpp"
#include "phasebound/oracle.hpp"
#include "phasebound/quadrature.hpp"
#include "phasebound/rng.hpp"

namespace phasebound {

namespace {

struct CheckResult {
    bool pass = false;
    std::string detail;
};

CheckResult check_gauss_hermite() {
    const GaussHermite gh = gauss_hermite(24);
    double w_sum = 0.0, t2_sum = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        w_sum += gh.weights[i];
        t2_sum += gh.weights[i] * gh.nodes[i] * gh.nodes[i];
    }
    const double e0 = std::abs(w_sum - std::sqrt(M_PI));
    const double e2 = std::abs(t2_sum - 0.5 * std::sqrt(M_PI));
    std::ostringstream d;
    d << "moment errors " << e0 << ", " << e2;
    return {e0 < 1e-12 && e2 < 1e-12, d.str()};
}

// 2-D quadrature of the folded density over [0, 2*pi) x [-8 sd, 8 sd].
CheckResult check_folded_normalization(FaultInjection fault) {
    Rng rng(Rng::derive(20240521, "selftest.folded"));
    double worst = 0.0;
    for (int rep = 0; rep < 4; ++rep) {
        Eigen::VectorXd mu(2);
        mu << 2.0 * M_PI * rng.uniform(), 2.0 * rng.normal();
        const double s1 = 0.2 + rng.uniform();
        const double s2 = 0.2 + rng.uniform();
        const double rho = 1.6 * rng.uniform() - 0.8;
        Eigen::MatrixXd cov(2, 2);
        cov << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;

        std::function<double(double, double)> density;
        if (fault == FaultInjection::cov_asymmetry) {
            // Emulate a symmetrization regression: evaluate the raw
            // quadratic form with an asymmetric matrix, bypassing the
            // construction-time repair.
            Eigen::MatrixXd bad = cov;
            bad(0, 1) += 0.05;
            const Eigen::MatrixXd inv = bad.inverse();
            const double log_norm =
                -std::log(2.0 * M_PI) - 0.5 * std::log(bad.determinant());
            density = [=](double phi, double w) {
                double acc = 0.0;
                for (int l = -8; l <= 8; ++l) {
                    Eigen::VectorXd z(2);
                    z << phi + 2.0 * M_PI * l - mu(0), w - mu(1);
                    acc += std::exp(log_norm - 0.5 * z.dot(inv * z));
                }
                return acc;
            };
        } else {
            const GaussianNd g(mu, cov);
            density = [g](double phi, double w) {
                const std::vector<double> reg{w};
                return std::exp(folded_log_density(g, phi, reg, 64));
            };
        }

        // Periodic trapezoid in phi, plain trapezoid in the register.
        const int nphi = 192, nw = 400;
        const double lo = mu(1) - 8.0 * s2, hi = mu(1) + 8.0 * s2;
        const double dphi = 2.0 * M_PI / nphi, dw = (hi - lo) / nw;
        double integral = 0.0;
        for (int i = 0; i < nphi; ++i) {
            const double phi = i * dphi;
            double col = 0.0;
            for (int j = 0; j <= nw; ++j) {
                const double w = lo + j * dw;
                const double f = density(phi, w);
                col += (j == 0 || j == nw) ? 0.5 * f : f;
            }
            integral += col * dw;
        }
        integral *= dphi;
        worst = std::max(worst, std::abs(integral - 1.0));
    }
    std::ostringstream d;
    d << "max |integral - 1| = " << worst;
    return {worst < 1e-6, d.str()};
}

CheckResult check_likelihood_identity() {
    Rng rng(Rng::derive(20240521, "selftest.like"));
    const Constellation cons = Constellation::qam16();
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const cplx y(3.0 * rng.normal(), 3.0 * rng.normal());
        const double phi = 2.0 * M_PI * rng.uniform();
        const ChannelParams ch(0.1 + 20.0 * rng.uniform());
        const double blind = blind_likelihood(y, phi, cons, ch);
        double mix = 0.0;
        for (int i = 0; i < cons.size(); ++i)
            mix += cons.priors[i] * data_aided_likelihood(y, cons.points[i], phi, ch);
        worst = std::max(worst, std::abs(blind - mix) / mix);
    }
    std::ostringstream d;
    d << "max relative error " << worst;
    return {worst < 1e-12, d.str()};
}

CheckResult check_degenerate_oracle(BoundEstimate& lb_out, BoundEstimate& ub_out) {
    const ArmaSpec spec = ArmaSpec::sm_oscillator(1e-6);
    const Constellation cons = Constellation::qam4();
    const ChannelParams ch = ChannelParams::from_db(6.0);
    const long n = 21000;
    const Trace trace = generate_trace(spec, cons, ch, n, 0xBEEFull);

    LbOptions lb_opts;
    lb_opts.burn_in = 1000;
    const BoundEstimate lb = lower_bound(trace, spec, cons, ch, lb_opts);
    UbOptions ub_opts;
    ub_opts.np_blind = 512;
    ub_opts.seed = 0xBEEFull;
    ub_opts.burn_in = 1000;
    const BoundEstimate ub = upper_bound(trace, spec, cons, ch, ub_opts);

    const double mi = oracle::awgn_mi_quadrature(cons, ch);
    lb_out = lb;
    ub_out = ub;
    std::ostringstream d;
    d << "lb " << lb.value << ", ub " << ub.value << ", awgn mi " << mi;
    return {std::abs(lb.value - mi) < 0.05 && std::abs(ub.value - mi) < 0.10, d.str()};
}

CheckResult check_bound_ordering(const BoundEstimate& lb, const BoundEstimate& ub) {
    const double slack = ub.value + 3.0 * ub.se - (lb.value - 3.0 * lb.se);
    std::ostringstream d;
    d << "ub + 3se - (lb - 3se) = " << slack;
    return {slack >= 0.0, d.str()};
}

} // namespace

int run_selftest(std::ostream& out, FaultInjection fault) {
    int failures = 0;
    const auto report = [&](const char* name, const CheckResult& r) {
        out << "selftest " << name << ": " << (r.pass ? "PASS" : "FAIL") << " (" << r.detail
            << ")\n";
        if (!r.pass) ++failures;
    };

    report("gauss-hermite-moments", check_gauss_hermite());
    report("folded-normalization", check_folded_normalization(fault));
    report("likelihood-identity", check_likelihood_identity());

    BoundEstimate lb, ub;
    report("degenerate-noise-oracle", check_degenerate_oracle(lb, ub));
    report("bound-ordering", check_bound_ordering(lb, ub));
    return failures;
}

} // namespace phasebound
