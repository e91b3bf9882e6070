#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sfhn/errors.hpp"
#include "sfhn/nonlinearity.hpp"

using namespace sfhn;

TEST_CASE("diffusion laws") {
    const auto lin = DiffusionLaw::linear(1.0);
    CHECK(gamma_eval(lin, 0.7) == 0.7);
    CHECK(gamma_prime(lin, -3.0) == 1.0);
    const auto cub = DiffusionLaw::cubic_monotone(1.0, 1.0);
    CHECK(gamma_eval(cub, 2.0) == 10.0);
    CHECK(gamma_prime(cub, 2.0) == 13.0);
    CHECK_THROWS_AS(DiffusionLaw::linear(0.0), ConfigError);
    CHECK_THROWS_AS(DiffusionLaw::cubic_monotone(1.0, -1.0), ConfigError);
    CHECK(diffusion_kind_from_string("saturating") == DiffusionLaw::Kind::saturating);
    CHECK_THROWS_AS(diffusion_kind_from_string("porous"), ConfigError);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (const auto& law : {lin, cub, DiffusionLaw::saturating(0.3), DiffusionLaw::cubic_monotone(0.1, 0.1)}) {
        CHECK(gamma_eval(law, 0.0) == 0.0);
        for (int k = 0; k < 10000; ++k) {
            const double r1 = u(rng), r2 = u(rng);
            const double lhs = (gamma_eval(law, r1) - gamma_eval(law, r2)) * (r1 - r2);
            CHECK(lhs >= law.c * (r1 - r2) * (r1 - r2) * (1 - 1e-12));
            if (k < 100) CHECK(gamma_prime(law, r1) >= law.c);
        }
    }
}

TEST_CASE("ionic cubic") {
    const IonicCubic g(0.5);
    for (double v : {0.0, 0.5, 1.0}) CHECK(ionic_eval(g, v) == 0.0);
    CHECK(ionic_eval(g, 2.0) == 3.0);
    CHECK(g.gprime_min() == doctest::Approx(0.5 - 2.25 / 3.0));
    CHECK(ionic_prime(g, 1.5 / 3.0) == doctest::Approx(g.gprime_min()));
    CHECK_THROWS_AS(IonicCubic(0.0), ConfigError);
    CHECK_THROWS_AS(IonicCubic(1.0), ConfigError);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        const double v = u(rng), h = 1e-5;
        const double fd = (ionic_eval(g, v + h) - ionic_eval(g, v - h)) / (2 * h);
        CHECK(std::abs(fd - ionic_prime(g, v)) <= 1e-8 * std::max(1.0, std::abs(ionic_prime(g, v))));
        CHECK(ionic_prime(g, v) >= g.gprime_min() - 1e-14);
    }
}

TEST_CASE("yosida cap") {
    const IonicCubic g(0.5);
    CHECK(yosida_admissible_max(g) == doctest::Approx(1.0 / (2.0 * (2.25 / 3.0 - 0.5))));
    CHECK_THROWS_AS(require_admissible_epsilon(g, yosida_admissible_max(g) * 1.01), ConfigError);
    CHECK_THROWS_AS(require_admissible_epsilon(g, 0.0), ConfigError);
    CHECK(std::isinf(yosida_admissible_max(IonicCubic(0.5, 0.0))));
    CHECK_THROWS_AS(resolvent_G(g, 10.0, 0.3), ConfigError);
}

TEST_CASE("resolvent") {
    const IonicCubic g(0.5);
    const double cap = yosida_admissible_max(g);
    CHECK(resolvent_G(g, 1e-3, 0.0) == 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double eps : {1e-6, 1e-3, 1e-1, cap}) {
        for (int k = 0; k < 1000; ++k) {
            const double z1 = u(rng), z2 = u(rng);
            const double w1 = resolvent_G(g, eps, z1), w2 = resolvent_G(g, eps, z2);
            CHECK(std::abs(w1 + eps * ionic_eval(g, w1) - z1) <= 1e-12);
            if (z1 < z2) CHECK(w1 < w2);
            if (z2 < z1) CHECK(w2 < w1);
            CHECK(std::abs(w1 - w2) <= 2.0 * std::abs(z1 - z2) * (1 + 1e-12));
        }
    }
}

TEST_CASE("yosida approximation") {
    const IonicCubic g(0.5);
    CHECK(yosida_G(g, 1e-2, 0.0) == 0.0);
    double prev = 1e300;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        const double gap = std::abs(yosida_G(g, eps, 0.25) - ionic_eval(g, 0.25));
        CHECK(gap < prev);
        prev = gap;
        const double z = 1.3;
        const double w = resolvent_G(g, eps, z);
        CHECK(yosida_G(g, eps, z) == doctest::Approx((z - w) / eps).epsilon(1e-8));
    }
    const IonicCubic off(0.5, 0.0);
    for (double z : {-1.0, 0.2, 3.0}) CHECK(yosida_G(off, 0.1, z) == 0.0);

    // derivative matches a difference quotient of G_ε
    for (double z : {-1.5, 0.1, 0.4, 0.9, 1.7}) {
        const double eps = 0.05, h = 1e-6;
        const double fd = (yosida_G(g, eps, z + h) - yosida_G(g, eps, z - h)) / (2 * h);
        CHECK(yosida_G_with_derivative(g, eps, z).derivative == doctest::Approx(fd).epsilon(1e-6));
    }
}
