#include <doctest.h>

#include <cmath>
#include <random>

#include "eetflux/oracle.hpp"
#include "support/fixtures.hpp"

using namespace eetflux;
using testing::max_abs;

TEST_CASE("Rabi dimer closed form") {
    const auto s0 = oracle::rabi_dimer_exact(1.0, 0.0);
    CHECK(s0.p1 == 1.0);
    CHECK(s0.im12 == 0.0);
    const auto s = oracle::rabi_dimer_exact(0.5, 1.3);
    CHECK(s.p1 + s.p2 == doctest::Approx(1.0));
    CHECK(s.re12 == 0.0);
    CHECK(s.im12 * s.im12 == doctest::Approx(s.p1 * s.p2));
}

TEST_CASE("pure dephasing exponent: closed form against nested quadrature") {
    const std::vector<BathMode> unit{{1.0, 1.0, 0.0}};
    CHECK(oracle::pure_dephasing_exact(unit, 1.0).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(oracle::pure_dephasing_exact(unit, 0.0) == std::complex<double>(0.0));

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const auto modes = testing::random_modes(rng, 1 + trial % 3);
        for (double t : {0.3, 1.0, 4.0}) {
            const auto exact = oracle::pure_dephasing_exact(modes, t);
            const auto quad = oracle::pure_dephasing_quadrature(modes, t);
            CHECK(std::abs(exact - quad) <= 1e-10);
        }
    }
}

TEST_CASE("pure dephasing exponent approaches the Markovian line at long times") {
    // D(t) -> g t / w - g / w^2
    const BathMode mode{0.8, 1.5, 0.0};
    const double t = 50.0 / mode.gamma;
    const auto d = oracle::pure_dephasing_exact({mode}, t).real();
    const double asymptote = mode.g * t / mode.gamma - mode.g / (mode.gamma * mode.gamma);
    CHECK(std::abs(d - asymptote) <= 0.01 * std::abs(asymptote));
}

TEST_CASE("Liouvillian exponential") {
    std::mt19937_64 rng(42);
    SUBCASE("agrees with unitary evolution when no channels are present") {
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 2 + trial % 5;
            const auto gen = build_generators(testing::random_network(rng, n), {});
            const auto rho0 = testing::random_density(rng, static_cast<Eigen::Index>(n));
            const auto a = oracle::liouvillian_expm_propagate(rho0, gen, 2.0);
            const auto b = oracle::unitary_evolve(rho0, gen.hamiltonian, 2.0);
            CHECK(max_abs(ComplexMatrix(a - b)) <= 1e-10);
        }
    }
    SUBCASE("single relaxation channel decays exponentially") {
        EnvironmentSpec env;
        env.relaxation = {{1, 0, MarkovianRate{0.2}}};
        const auto m = testing::make_model({0.0, 0.0}, {}, env);
        const auto gen = build_generators(m.network, m.environment);
        ComplexMatrix rho0 = ComplexMatrix::Zero(2, 2);
        rho0(1, 1) = 1.0;
        for (double t : {0.5, 3.0, 10.0}) {
            const auto rho = oracle::liouvillian_expm_propagate(rho0, gen, t);
            CHECK(rho(1, 1).real() == doctest::Approx(std::exp(-0.2 * t)).epsilon(1e-12));
        }
    }
    SUBCASE("trace preserving and Hermiticity preserving") {
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t n = 2 + trial % 5;
            const auto gen = build_generators(testing::random_network(rng, n), testing::mixed_environment(rng, n, true, true));
            const auto rho0 = testing::random_density(rng, static_cast<Eigen::Index>(n));
            const auto rho = oracle::liouvillian_expm_propagate(rho0, gen, 3.0);
            CHECK(std::abs(rho.trace() - Complex(1.0)) <= 1e-12);
            CHECK(max_abs(ComplexMatrix(rho - rho.adjoint())) <= 1e-12);
        }
    }
    SUBCASE("refusals") {
        const auto gen = build_generators(testing::random_network(rng, 3), testing::mixed_environment(rng, 3, false, true));
        CHECK_THROWS_AS(oracle::liouvillian(gen), std::invalid_argument);
        const auto big = build_generators(testing::random_network(rng, 13), {});
        CHECK_THROWS_AS(oracle::liouvillian(big), std::invalid_argument);
    }
}
