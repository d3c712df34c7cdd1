#include <doctest.h>

#include <cmath>

#include "phasebound/ekf.hpp"
#include "phasebound/rng.hpp"

using namespace phasebound;

namespace {

// Textbook (non-Joseph) update, used only as a cross-check here.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> standard_update(const Eigen::VectorXd& mu,
                                                            const Eigen::MatrixXd& p, cplx y,
                                                            cplx x, ChannelParams ch) {
    const int d = static_cast<int>(mu.size());
    const cplx pred = x * std::polar(1.0, mu(0));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, d);
    h(0, 0) = -pred.imag();
    h(1, 0) = pred.real();
    const double r = 0.5 / ch.snr;
    const Eigen::Matrix2d s = h * p * h.transpose() + r * Eigen::Matrix2d::Identity();
    const Eigen::MatrixXd k = p * h.transpose() * s.inverse();
    Eigen::Vector2d innov(y.real() - pred.real(), y.imag() - pred.imag());
    return {mu + k * innov, (Eigen::MatrixXd::Identity(d, d) - k * h) * p};
}

} // namespace

TEST_CASE("ekf_init: known phase, stationary register variance") {
    SUBCASE("zero phase gives the zero mean vector") {
        const EkfState e = ekf_init(ArmaSpec::wiener_emulation(0.1), 0.0);
        CHECK(e.moments.mean().isZero(0.0));
        CHECK(e.moments.cov()(0, 0) == doctest::Approx(1e-4));
        // white register: stationary variance gamma^2
        CHECK(e.moments.cov()(1, 1) == doctest::Approx(0.01).epsilon(1e-12));
    }
    SUBCASE("AR(1) register variance gamma^2/(1 - a^2)") {
        const EkfState e = ekf_init(ArmaSpec({0.5}, {0.0}, 0.1), 1.0);
        CHECK(e.moments.mean()(0) == doctest::Approx(1.0));
        CHECK(e.moments.cov()(1, 1) == doctest::Approx(0.01 / 0.75).epsilon(1e-12));
        CHECK(e.moments.cov()(0, 1) == 0.0);
    }
}

TEST_CASE("ekf_predict applies the transition moments and wraps the mean") {
    const ArmaSpec spec({0.0}, {1.0}, 0.1); // phase moves by the register content
    EkfState e = ekf_init(spec, 6.2);
    // push the mean phase over the wrap point
    Eigen::VectorXd mu = e.moments.mean();
    mu(1) = 0.5;
    e.moments = GaussianNd(mu, e.moments.cov());
    const EkfState out = ekf_predict(e, spec);
    CHECK(out.moments.mean()(0) == doctest::Approx(wrap_2pi(6.7)));
    const Eigen::MatrixXd expect = transition_matrix(spec) * e.moments.cov() *
                                       transition_matrix(spec).transpose() +
                                   process_cov(spec);
    CHECK((out.moments.cov() - expect).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK(out.k == e.k);
}

TEST_CASE("ekf_update limit cases") {
    const ArmaSpec spec = ArmaSpec::wiener_emulation(0.1);
    const ChannelParams ch(10.0);
    const cplx x = std::polar(1.0, M_PI / 4.0);

    SUBCASE("zero prior covariance pins the estimate") {
        const EkfState prior{GaussianNd((Eigen::VectorXd(2) << 1.0, 0.0).finished(),
                                        Eigen::MatrixXd::Zero(2, 2)),
                             0};
        const EkfState post = ekf_update(prior, cplx(5.0, -3.0), x, ch);
        CHECK(post.moments.mean()(0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(post.moments.mean()(1) == doctest::Approx(0.0));
        CHECK(post.moments.cov().lpNorm<Eigen::Infinity>() < 1e-9);
        CHECK(post.k == 1);
    }

    SUBCASE("zero innovation keeps the mean and shrinks the covariance") {
        const EkfState prior{GaussianNd((Eigen::VectorXd(2) << 0.8, 0.0).finished(),
                                        0.05 * Eigen::MatrixXd::Identity(2, 2)),
                             0};
        const cplx y = x * std::polar(1.0, 0.8);
        const EkfState post = ekf_update(prior, y, x, ch);
        CHECK(post.moments.mean()(0) == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(post.moments.cov().trace() < prior.moments.cov().trace());
    }

    SUBCASE("scalar phase variance follows sigma^2 r / (sigma^2 + r)") {
        const double sigma2 = 0.03;
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
        p(0, 0) = sigma2;
        const EkfState prior{GaussianNd((Eigen::VectorXd(2) << 2.1, 0.0).finished(), p), 0};
        const EkfState post = ekf_update(prior, cplx(0.2, 0.4), x, ch);
        const double r = 0.5 / ch.snr;
        CHECK(post.moments.cov()(0, 0) ==
              doctest::Approx(sigma2 * r / (sigma2 + r)).epsilon(1e-10));
    }
}

TEST_CASE("joseph form agrees with the standard covariance update") {
    Rng rng(63);
    const ChannelParams ch(5.0);
    for (int rep = 0; rep < 40; ++rep) {
        const int d = 2 + rep % 3;
        Eigen::MatrixXd a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = 0.3 * rng.normal();
        Eigen::VectorXd mu(d);
        for (int i = 0; i < d; ++i) mu(i) = rng.normal();
        mu(0) = wrap_2pi(mu(0));
        const Eigen::MatrixXd p = a * a.transpose();
        const cplx x = std::polar(1.0, 2.0 * M_PI * rng.uniform());
        const cplx y(rng.normal(), rng.normal());

        const EkfState post = ekf_update(EkfState{GaussianNd(mu, p), 0}, y, x, ch);
        const auto [mu_std, p_std] = standard_update(mu, p, y, x, ch);
        CHECK(std::abs(post.moments.mean()(0) - wrap_2pi(mu_std(0))) < 1e-10);
        for (int i = 1; i < d; ++i) CHECK(post.moments.mean()(i) ==
                                          doctest::Approx(mu_std(i)).epsilon(1e-10));
        CHECK((post.moments.cov() - 0.5 * (p_std + p_std.transpose()))
                  .lpNorm<Eigen::Infinity>() < 1e-10);
        CHECK(post.moments.cov().trace() <= p.trace() + 1e-12);
    }
}

TEST_CASE("data-aided tracking stays inside its covariance envelope") {
    const ArmaSpec spec = ArmaSpec::sm_oscillator(0.05);
    const Constellation cons = Constellation::qam4();
    const ChannelParams ch(10.0);
    const long n = 20000, burn = 1000;
    const Trace tr = generate_trace(spec, cons, ch, n, 314159);

    EkfState e = ekf_init(spec, tr.s[0].phi);
    long ok = 0, total = 0;
    for (long k = 1; k <= n; ++k) {
        if (k > 1) e = ekf_predict(e, spec);
        e = ekf_update(e, tr.y[k - 1], tr.x[k - 1], ch);
        if (k <= burn) continue;
        const double err = std::abs(std::remainder(e.moments.mean()(0) - tr.s[k - 1].phi,
                                                   2.0 * M_PI));
        const double envelope = 3.0 * std::sqrt(e.moments.cov()(0, 0));
        ++total;
        if (err < envelope) ++ok;
    }
    CHECK(static_cast<double>(ok) / static_cast<double>(total) >= 0.99);
}
