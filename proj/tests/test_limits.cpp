#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "yule/limits.hpp"
#include "yule/rng.hpp"

using namespace yule;

TEST_CASE("split-time CDF closed form") {
    CHECK(limits::tn_cdf(1, 0.7) == doctest::Approx(-std::expm1(-0.7)).epsilon(1e-14));
    CHECK(limits::tn_cdf(5, 0.0) == 0.0);
    CHECK(limits::tn_cdf(2, std::log(2.0)) == doctest::Approx(0.25).epsilon(1e-14));
    double prev = 0.0;
    for (double x = 0.0; x <= 10.0; x += 0.1) {
        const double v = limits::tn_cdf(7, x);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("Gumbel CDF closed form") {
    CHECK(limits::gumbel_cdf(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(limits::gumbel_cdf(50.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(limits::gumbel_cdf(-50.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(limits::gumbel_cdf(-std::log(std::log(2.0))) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("first-empty survival limit") {
    CHECK(limits::nu_survival_limit(0.0, 1.0) == 1.0);
    // regression constants, cross-checked against direct Monte Carlo
    CHECK(limits::nu_survival_limit(1.0, 1.0) ==
          doctest::Approx(0.5390321576989691).epsilon(1e-8));
    CHECK(limits::nu_survival_limit(0.5, 1.0) ==
          doctest::Approx(0.870056556601336).epsilon(1e-8));
    CHECK(limits::nu_survival_limit(2.0, 1.0) ==
          doctest::Approx(0.09558809395750217).epsilon(1e-8));
    CHECK(limits::nu_survival_limit(1.0, 0.5) ==
          doctest::Approx(0.3614924528894014).epsilon(1e-8));
    double prev = 1.0;
    for (double x = 0.0; x <= 4.0; x += 0.25) {
        const double v = limits::nu_survival_limit(x, 1.0);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    CHECK(limits::nu_survival_limit(25.0, 1.0) < 1e-6);

    // MC oracle: average of exp(-W^{-1}/3) over exponential draws
    Rng rng(RngStream{2024, 0});
    double s = 0.0, s2 = 0.0;
    const int reps = 1000000;
    for (int i = 0; i < reps; ++i) {
        const double v = std::exp(-1.0 / (3.0 * rng.exponential()));
        s += v;
        s2 += v * v;
    }
    const double m = s / reps;
    const double se = std::sqrt((s2 / reps - m * m) / reps);
    CHECK(std::abs(m - limits::nu_survival_limit(1.0, 1.0)) < 3.0 * se);
}

TEST_CASE("mean empty count limit and its divergence marker") {
    const auto v = limits::mean_count_limit(1.0, 0.5);
    CHECK_FALSE(v.is_infinite);
    CHECK(v.value == doctest::Approx(std::sqrt(M_PI) / 1.25).epsilon(1e-12));
    CHECK(limits::mean_count_limit(1.0, 1.0).is_infinite);
    CHECK(limits::mean_count_limit(3.0, 2.0).is_infinite);
    const auto z = limits::mean_count_limit(0.0, 0.5);
    CHECK_FALSE(z.is_infinite);
    CHECK(z.value == 0.0);
}

TEST_CASE("mixed Poisson count pmf: normalization, void term, mean") {
    double total = 0.0, mean = 0.0;
    for (unsigned j = 0; j <= 60; ++j) {
        const double p = limits::mixed_poisson_count_pmf(j, 1.0, 0.5);
        total += p;
        mean += double(j) * p;
    }
    // the count distribution has a power-law tail, so compare the truncated
    // sums against exact tail corrections under the same exponential mixture
    boost::math::quadrature::exp_sinh<double> integ;
    const double c = 1.0 / (0.5 * 2.5);
    const double tail_mass = integ.integrate([&](double w) {
        return boost::math::gamma_p(61.0, c / std::sqrt(w)) * std::exp(-w);
    });
    const double tail_mean = integ.integrate([&](double w) {
        const double lam = c / std::sqrt(w);
        return lam * boost::math::gamma_p(60.0, lam) * std::exp(-w);
    });
    CHECK(std::abs(total + tail_mass - 1.0) <= 1e-8);
    CHECK(std::abs(mean + tail_mean - limits::mean_count_limit(1.0, 0.5).value) <= 1e-6);
    CHECK(std::abs(limits::mixed_poisson_count_pmf(0, 1.0, 0.5) -
                   limits::nu_survival_limit(1.0, 0.5)) <= 1e-9);
}

TEST_CASE("rectangle Laplace functional limit") {
    CHECK(limits::laplace_functional_limit(1.0, 1.0, 1e-12, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(limits::laplace_functional_limit(1.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(0.6369965664767496).epsilon(1e-8));
    // antitone in theta, saturating at the void probability
    double prev = 1.0;
    for (double th : {0.25, 0.5, 1.0, 2.0, 8.0}) {
        const double v = limits::laplace_functional_limit(1.0, 1.0, th, 1.0);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(std::abs(limits::laplace_functional_limit(1.0, 1.0, 1e4, 1.0) -
                   limits::laplace_functional_limit(1.0, 1.0, 1e8, 1.0)) <= 1e-9);
    CHECK_THROWS_AS(limits::laplace_functional_limit(0.0, 1.0, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("deterministic limit intensity integral") {
    CHECK(limits::det_limit_intensity(-1.0, 0.0, 1.0, 2.0) ==
          doctest::Approx(std::sqrt(2.0) * (1.0 - std::exp(-1.0))).epsilon(1e-13));
    const double z2 = M_PI * M_PI / 6.0;
    CHECK(limits::det_limit_intensity(-1.0, 0.0, 1.0 / z2, 2.0) ==
          doctest::Approx(0.6970126589447093).epsilon(1e-12));
    CHECK_THROWS_AS(limits::det_limit_intensity(0.0, 1.0, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("limit of E(1/D) via Gamma ratio") {
    CHECK(limits::expected_inv_d_rho(1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(limits::expected_inv_d_rho(2.0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(limits::expected_inv_d_rho(1.5) ==
          doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    CHECK_THROWS_AS(limits::expected_inv_d_rho(0.5), std::invalid_argument);
}

TEST_CASE("quadrature self-consistency under tolerance halving") {
    limits::QuadratureSpec loose;
    loose.relative_tolerance = 2e-9;
    limits::QuadratureSpec tight;
    tight.relative_tolerance = 1e-9;
    CHECK(std::abs(limits::nu_survival_limit(1.0, 1.0, loose) -
                   limits::nu_survival_limit(1.0, 1.0, tight)) < 1e-9);
}
