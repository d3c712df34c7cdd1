#include <doctest.h>

#include <cmath>

#include "phasebound/quadrature.hpp"

using namespace phasebound;

TEST_CASE("gauss-hermite basics") {
    const GaussHermite one = gauss_hermite(1);
    CHECK(one.nodes[0] == doctest::Approx(0.0));
    CHECK(one.weights[0] == doctest::Approx(std::sqrt(M_PI)));

    const GaussHermite gh = gauss_hermite(16);
    double w = 0.0, wt2 = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        w += gh.weights[i];
        wt2 += gh.weights[i] * gh.nodes[i] * gh.nodes[i];
    }
    CHECK(w == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(wt2 == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-13));

    // Nodes come out sorted and symmetric.
    for (std::size_t i = 1; i < gh.nodes.size(); ++i) CHECK(gh.nodes[i] > gh.nodes[i - 1]);
    for (std::size_t i = 0; i < gh.nodes.size(); ++i)
        CHECK(gh.nodes[i] == doctest::Approx(-gh.nodes[gh.nodes.size() - 1 - i]).epsilon(1e-10));
}

TEST_CASE("rule of order n integrates t^(2n-2) exactly") {
    // integral of t^8 e^{-t^2} = (105/16) sqrt(pi)
    const GaussHermite gh = gauss_hermite(5);
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i)
        acc += gh.weights[i] * std::pow(gh.nodes[i], 8);
    CHECK(acc == doctest::Approx(105.0 / 16.0 * std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("expect() computes Gaussian expectations") {
    const GaussHermite gh = gauss_hermite(32);
    // E[cos(Z)] for Z ~ N(mu, sd^2) is cos(mu) exp(-sd^2/2)
    const double mu = 0.7, sd = 0.4;
    const double got = gh.expect(mu, sd, [](double t) { return std::cos(t); });
    CHECK(got == doctest::Approx(std::cos(mu) * std::exp(-0.5 * sd * sd)).epsilon(1e-12));
}
