#include <doctest.h>

#include <cmath>

#include "phasebound/gaussian.hpp"
#include "phasebound/rng.hpp"

using namespace phasebound;

namespace {

// Brute-force density via explicit inverse and determinant.
double naive_log_density(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov,
                         const Eigen::VectorXd& x) {
    const int d = static_cast<int>(mu.size());
    const Eigen::VectorXd z = x - mu;
    return -0.5 * d * std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant()) -
           0.5 * z.dot(cov.inverse() * z);
}

// 1-D wrapped Gaussian by direct summation.
double wrapped_1d(double mu, double var, double phi, int terms = 500) {
    double acc = 0.0;
    for (int l = -terms; l <= terms; ++l) {
        const double z = phi + 2.0 * M_PI * l - mu;
        acc += std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
    }
    return acc;
}

} // namespace

TEST_CASE("log_density closed forms") {
    const GaussianNd g1((Eigen::VectorXd(1) << 0.0).finished(),
                        Eigen::MatrixXd::Identity(1, 1));
    CHECK(g1.log_density((Eigen::VectorXd(1) << 0.0).finished()) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));

    const GaussianNd g2(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
    CHECK(g2.log_density(Eigen::VectorXd::Zero(2)) ==
          doctest::Approx(-1.8378770664093453).epsilon(1e-12));
}

TEST_CASE("log_density matches the brute-force evaluation on random SPD input") {
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 2 + rep % 3;
        Eigen::MatrixXd a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
        const Eigen::MatrixXd cov =
            a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd mu(d), x(d);
        for (int i = 0; i < d; ++i) {
            mu(i) = rng.normal();
            x(i) = mu(i) + rng.normal();
        }
        const GaussianNd g(mu, cov);
        CHECK(g.log_density(x) == doctest::Approx(naive_log_density(mu, cov, x)).epsilon(1e-12));
    }
}

TEST_CASE("construction re-symmetrizes and rejects strongly indefinite input") {
    Eigen::MatrixXd skew(2, 2);
    skew << 1.0, 0.2 + 5e-13, 0.2 - 5e-13, 1.0;
    const GaussianNd g(Eigen::VectorXd::Zero(2), skew);
    CHECK((g.cov() - g.cov().transpose()).lpNorm<Eigen::Infinity>() == 0.0);

    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_WITH_AS(GaussianNd(Eigen::VectorXd::Zero(2), bad),
                         doctest::Contains("smallest eigenvalue"), EstimatorError);
}

TEST_CASE("singular covariance is lifted enough to evaluate") {
    const GaussianNd g(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2));
    CHECK(g.regularized());
    CHECK(std::isfinite(g.log_density(Eigen::VectorXd::Zero(2))));
}

TEST_CASE("process covariance has unit rank and gamma^2 block") {
    const ArmaSpec spec = ArmaSpec::sm_oscillator(0.2);
    const Eigen::MatrixXd q = process_cov(spec);
    CHECK(q.rows() == 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(q(i, j) == doctest::Approx(0.04));
    CHECK(q.bottomRightCorner(2, 2).isZero(0.0));
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(q).rank() == 1);
}

TEST_CASE("propagate: identity, closed form, and sampling cross-check") {
    SUBCASE("identity map with zero noise") {
        const GaussianNd g((Eigen::VectorXd(2) << 1.0, 2.0).finished(),
                           (Eigen::MatrixXd(2, 2) << 0.5, 0.1, 0.1, 0.3).finished());
        const GaussianNd out =
            propagate(g, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2));
        CHECK((out.mean() - g.mean()).norm() == 0.0);
        CHECK((out.cov() - g.cov()).lpNorm<Eigen::Infinity>() < 1e-15);
    }

    SUBCASE("wiener-emulation closed form") {
        Eigen::MatrixXd f(2, 2);
        f << 1.0, 0.0, 0.0, 0.0;
        const Eigen::MatrixXd q = 0.01 * Eigen::MatrixXd::Ones(2, 2);
        const GaussianNd out =
            propagate(GaussianNd(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)), f, q);
        CHECK(out.cov()(0, 0) == doctest::Approx(1.01).epsilon(1e-14));
        CHECK(out.cov()(0, 1) == doctest::Approx(0.01).epsilon(1e-14));
        CHECK(out.cov()(1, 0) == doctest::Approx(0.01).epsilon(1e-14));
        CHECK(out.cov()(1, 1) == doctest::Approx(0.01).epsilon(1e-14));
    }

    SUBCASE("moments match Monte Carlo push-through of step_state") {
        const ArmaSpec spec({0.3}, {0.2}, 0.1);
        Eigen::VectorXd mu(2);
        mu << M_PI, 0.05;
        Eigen::MatrixXd cov(2, 2);
        cov << 0.02, 0.003, 0.003, 0.01;
        const GaussianNd g(mu, cov);
        const GaussianNd out = propagate(g, transition_matrix(spec), process_cov(spec));

        const long nsamp = 200000;
        Rng rng(4711);
        const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
        Eigen::VectorXd mean_hat = Eigen::VectorXd::Zero(2);
        Eigen::MatrixXd second = Eigen::MatrixXd::Zero(2, 2);
        for (long s = 0; s < nsamp; ++s) {
            Eigen::VectorXd z(2);
            z << rng.normal(), rng.normal();
            const Eigen::VectorXd st = mu + chol * z;
            const StateVector next =
                step_state(spec, StateVector(st(0), {st(1)}), spec.gamma() * rng.normal());
            Eigen::VectorXd v(2);
            v << next.phi, next.reg[0];
            mean_hat += v;
            second += v * v.transpose();
        }
        mean_hat /= static_cast<double>(nsamp);
        const Eigen::MatrixXd cov_hat =
            second / static_cast<double>(nsamp) - mean_hat * mean_hat.transpose();

        for (int i = 0; i < 2; ++i) {
            const double se = std::sqrt(out.cov()(i, i) / nsamp);
            CHECK(std::abs(mean_hat(i) - out.mean()(i)) < 4.0 * se);
            for (int j = 0; j < 2; ++j) {
                const double se_cov = std::sqrt(
                    (out.cov()(i, i) * out.cov()(j, j) + out.cov()(i, j) * out.cov()(i, j)) /
                    nsamp);
                CHECK(std::abs(cov_hat(i, j) - out.cov()(i, j)) < 4.0 * se_cov);
            }
        }
    }
}

TEST_CASE("propagate keeps covariance symmetric PSD on random input") {
    Rng rng(17);
    const ArmaSpec spec = ArmaSpec::sm_oscillator(0.15);
    const Eigen::MatrixXd f = transition_matrix(spec);
    const Eigen::MatrixXd q = process_cov(spec);
    for (int rep = 0; rep < 30; ++rep) {
        Eigen::MatrixXd a(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) a(i, j) = rng.normal();
        Eigen::VectorXd mu(4);
        for (int i = 0; i < 4; ++i) mu(i) = rng.normal();
        const GaussianNd out = propagate(GaussianNd(mu, a * a.transpose()), f, q);
        CHECK((out.cov() - out.cov().transpose()).lpNorm<Eigen::Infinity>() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.cov(), Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("folded density: concentrated case equals the plain density") {
    Eigen::VectorXd mu(2);
    mu << 3.0, 0.1;
    Eigen::MatrixXd cov(2, 2);
    cov << 1e-6, 0.0, 0.0, 1e-4; // sd_phi = 1e-3
    const GaussianNd g(mu, cov);
    const std::vector<double> reg{0.1};
    CHECK(folded_log_density(g, 3.0, reg) ==
          doctest::Approx(g.log_density(mu)).epsilon(1e-12));
}

TEST_CASE("folded density: huge phase variance approaches uniform x marginal") {
    Eigen::VectorXd mu(2);
    mu << 1.0, 0.2;
    Eigen::MatrixXd cov(2, 2);
    cov << 1e4, 0.0, 0.0, 0.09; // sd_phi = 100, independent register
    const GaussianNd g(mu, cov);
    for (double phi : {0.0, 1.5, 4.0}) {
        for (double w : {-0.1, 0.2, 0.6}) {
            const std::vector<double> reg{w};
            const double val = std::exp(folded_log_density(g, phi, reg, 500));
            const double expect =
                (1.0 / (2.0 * M_PI)) *
                std::exp(-0.5 * (w - 0.2) * (w - 0.2) / 0.09) / std::sqrt(2.0 * M_PI * 0.09);
            CHECK(val == doctest::Approx(expect).epsilon(1e-4));
        }
    }
}

TEST_CASE("folded density is 2pi-periodic in phi") {
    Eigen::VectorXd mu(2);
    mu << 2.0, -0.1;
    Eigen::MatrixXd cov(2, 2);
    cov << 0.3, 0.05, 0.05, 0.2;
    const GaussianNd g(mu, cov);
    const std::vector<double> reg{0.07};
    const double base = folded_log_density(g, 1.1, reg);
    for (int k : {-3, -1, 1, 2}) {
        CHECK(folded_log_density(g, 1.1 + 2.0 * M_PI * k, reg) ==
              doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("folded density with diagonal covariance factorizes") {
    Eigen::VectorXd mu(2);
    mu << 0.9, 0.3;
    Eigen::MatrixXd cov(2, 2);
    cov << 0.4, 0.0, 0.0, 0.05;
    const GaussianNd g(mu, cov);
    for (double phi : {0.1, 2.2, 5.9}) {
        const std::vector<double> reg{0.25};
        const double lhs = std::exp(folded_log_density(g, phi, reg, 100));
        const double rhs = wrapped_1d(0.9, 0.4, phi) *
                           std::exp(-0.5 * (0.25 - 0.3) * (0.25 - 0.3) / 0.05) /
                           std::sqrt(2.0 * M_PI * 0.05);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("folded density integrates to one over the cylinder (N=1)") {
    Rng rng(88);
    for (int rep = 0; rep < 3; ++rep) {
        Eigen::VectorXd mu(2);
        mu << 2.0 * M_PI * rng.uniform(), rng.normal();
        const double s1 = 0.3 + 0.8 * rng.uniform();
        const double s2 = 0.2 + 0.5 * rng.uniform();
        const double rho = 1.2 * rng.uniform() - 0.6;
        Eigen::MatrixXd cov(2, 2);
        cov << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
        const GaussianNd g(mu, cov);

        const int nphi = 256, nw = 500;
        const double lo = mu(1) - 8.0 * s2, hi = mu(1) + 8.0 * s2;
        const double dphi = 2.0 * M_PI / nphi, dw = (hi - lo) / nw;
        double integral = 0.0;
        for (int i = 0; i < nphi; ++i) {
            double col = 0.0;
            for (int j = 0; j <= nw; ++j) {
                const std::vector<double> reg{lo + j * dw};
                const double f = std::exp(folded_log_density(g, i * dphi, reg, 64));
                col += (j == 0 || j == nw) ? 0.5 * f : f;
            }
            integral += col * dw;
        }
        integral *= dphi;
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("fold cap reports truncation") {
    Eigen::VectorXd mu(2);
    mu << 0.0, 0.0;
    Eigen::MatrixXd cov(2, 2);
    cov << 1e4, 0.0, 0.0, 1.0;
    const GaussianNd g(mu, cov);
    bool cap = false;
    const std::vector<double> reg{0.0};
    folded_log_density(g, 0.0, reg, 4, &cap);
    CHECK(cap);
    cap = false;
    folded_log_density(g, 0.0, reg, 500, &cap);
    CHECK_FALSE(cap);
}
