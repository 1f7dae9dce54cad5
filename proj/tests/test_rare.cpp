#include <doctest.h>

#include <cmath>

#include "yule/limits.hpp"
#include "yule/model.hpp"
#include "yule/rare.hpp"
#include "yule/rng.hpp"

using namespace yule;

TEST_CASE("J integral: endpoints and monotonicity") {
    CHECK(rare::j_integral(0.0, 2.0) == doctest::Approx(1.0).epsilon(1e-7));
    double prev = 1.1;
    for (double u : {0.0, 0.1, 1.0, 10.0, 100.0}) {
        const double v = rare::j_integral(u, 2.0);
        CHECK(v < prev);
        CHECK(v >= 0.0);
        prev = v;
    }
}

TEST_CASE("case-3 core integral has the closed form pi/(5 sqrt 2) at rho = 2") {
    // int_0^inf u^{-1/2} E(A/(A+rho u D)) du = pi sqrt(A/(rho D)) pointwise,
    // which integrates in v and D to pi/(5 sqrt 2)
    CHECK(rare::case3_integral(2.0) ==
          doctest::Approx(M_PI / (5.0 * std::sqrt(2.0))).epsilon(2e-6));
}

TEST_CASE("regime thresholds and predictions") {
    rare::RegimeSpec spec{2.0, 0.22, 0.0, 0.0, 1.0};
    CHECK(spec.delta0() == doctest::Approx(0.12).epsilon(1e-12));
    CHECK(spec.delta1() == doctest::Approx(0.17).epsilon(1e-12));

    spec.delta = 0.06;
    auto p1 = rare::regime_prediction(spec);
    CHECK(p1.case_id == 1);
    CHECK(p1.exponent.is_infinite);

    spec.delta = 0.14;
    auto p2 = rare::regime_prediction(spec);
    CHECK(p2.case_id == 2);
    CHECK(p2.exponent.value == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(p2.prefactor.value ==
          doctest::Approx(1.0 / 4.0 * 2.0 / (1.0 * 2.0) * 0.5).epsilon(1e-10));

    spec.delta = 0.25;
    auto p3 = rare::regime_prediction(spec);
    CHECK(p3.case_id == 3);
    CHECK(p3.exponent.value == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(p3.prefactor.value > 0.0);

    rare::RegimeSpec left{2.0, 0.2, 0.5, 0.0, 1.0};
    CHECK(rare::regime_prediction(left).exponent.value == doctest::Approx(0.0));

    rare::RegimeSpec crit{1.0, 0.3, 0.1, 0.0, 1.0};
    CHECK_THROWS_AS(rare::regime_prediction(crit), std::invalid_argument);
    rare::RegimeSpec badalpha{2.0, 0.5, 0.1, 0.0, 1.0};
    CHECK_THROWS_AS(rare::regime_prediction(badalpha), std::invalid_argument);
}

TEST_CASE("case-2 and case-3 exponents coincide at delta = delta1") {
    for (double rho : {1.5, 2.0, 3.0}) {
        for (double alpha = 1.0 / (2.0 * rho + 1.0); alpha < 1.0 / (rho + 2.0) - 1e-9;
             alpha += 0.005) {
            const double d1 = (1.0 - alpha * (rho + 1.0)) / rho;
            const double e2 = (rho + 2.0) * alpha + d1 * (rho - 1.0) - 1.0;
            const double e3 = ((2.0 * rho + 1.0) * alpha - 1.0) / rho;
            CHECK(std::abs(e2 - e3) < 1e-12);
        }
    }
}

TEST_CASE("expected sum: conventions and monotonicity") {
    CHECK(rare::expected_exp_sum(1e6, 2.0, 2.0, rare::Method::quadrature).value == 0.0);
    double prev = 0.0;
    for (double kmax : {5.0, 10.0, 20.0}) {
        const double v =
            rare::expected_exp_sum(1e6, kmax, 2.0, rare::Method::quadrature).value;
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(rare::expected_exp_sum(1e6, 10.0, 0.5, rare::Method::quadrature),
                    std::invalid_argument);
    CHECK_THROWS_AS(rare::expected_exp_sum(1e6, 10.0, 2.0, rare::Method::mc_oracle),
                    std::invalid_argument);
}

TEST_CASE("per-term asymptotic representation vs direct simulation") {
    for (double rho : {1.0, 1.5, 2.0}) {
        for (std::size_t i : {25u, 50u}) {
            const double n = 1e6;
            const double quad = rare::exp_term_asymptotic(double(i), n, rho);
            Rng rng(RngStream{3000 + std::uint64_t(rho * 10), i});
            double s = 0.0;
            const int reps = 100000;
            model::SplitSequence splits;
            for (int r = 0; r < reps; ++r) {
                model::sample_splits_into(i, rng, splits);
                auto pv = model::bin_probabilities(splits, rho);
                s += std::exp(-n * pv.probs[i - 1]);
            }
            const double mc = s / reps;
            CHECK(std::abs(quad / mc - 1.0) < 0.02);
        }
    }
}

TEST_CASE("exact per-term quadrature agrees with simulation at rho = 1/2") {
    const double n = 1e5, rho = 0.5;
    for (std::size_t i : {1u, 3u, 20u, 60u}) {
        const double quad = rare::exp_term_exact(i, n, rho);
        Rng rng(RngStream{3100, i});
        double s = 0.0;
        const int reps = 100000;
        model::SplitSequence splits;
        for (int r = 0; r < reps; ++r) {
            model::sample_splits_into(i, rng, splits);
            auto pv = model::bin_probabilities(splits, rho);
            s += std::exp(-n * pv.probs[i - 1]);
        }
        const double mc = s / reps;
        CHECK(std::abs(quad - mc) < 0.01 * std::max(0.05, mc) + 3e-3);
    }
}

TEST_CASE("conditioned sum: limits in the conditioning level") {
    const double n = 1e6, rho = 2.0, kmax = 20.0;
    const double full = rare::expected_exp_sum(n, kmax, rho, rare::Method::quadrature).value;
    const double wide = rare::conditioned_exp_sum(n, kmax, rho, 50.0).value;
    CHECK(wide == doctest::Approx(full).epsilon(1e-6));
    CHECK(rare::conditioned_exp_sum(n, kmax, rho, 1e-8).value <= 1e-8);
    const double half = rare::conditioned_exp_sum(n, kmax, rho, 1.0).value;
    CHECK(half < full);
    CHECK(half > 0.0);
}

TEST_CASE("quadrature and mc-oracle cross-validation of the conditioned sum") {
    const double n = 1e6, rho = 2.0;
    const double kmax = std::floor(0.5 * std::pow(n, 0.22));
    const double b = 0.17 * std::log(n);
    auto q = rare::conditioned_exp_sum(n, kmax, rho, b);
    Rng rng(RngStream{555, 0});
    auto m = rare::conditioned_exp_sum(n, kmax, rho, b, rare::Method::mc_oracle, &rng,
                                       200000);
    CHECK(std::abs(q.value - m.value) <= q.error_estimate + 3.0 * m.error_estimate);
}

TEST_CASE("psi ratio: additivity, mass, x-independence") {
    const double rho = 2.0;
    CHECK(rare::psi_ratio(-INFINITY, INFINITY, rho) == doctest::Approx(1.0).epsilon(1e-12));
    const double a = rare::psi_ratio(-1.0, 0.0, rho);
    const double b = rare::psi_ratio(0.0, 1.0, rho);
    const double ab = rare::psi_ratio(-1.0, 1.0, rho);
    CHECK(std::abs(a + b - ab) < 1e-9);
    CHECK(std::abs(rare::psi_ratio(-1.0, 1.0, rho, 0.5) -
                   rare::psi_ratio(-1.0, 1.0, rho, 2.0)) < 1e-10);
    CHECK_THROWS_AS(rare::psi_ratio(1.0, 0.0, rho), std::invalid_argument);
    CHECK_THROWS_AS(rare::psi_ratio(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("critical conditioned limit at rho = 1") {
    CHECK(rare::rho1_conditioned_limit(1.0 / 3.0, 1.0) ==
          doctest::Approx(1.0 / 9.0).epsilon(1e-13));
    CHECK(rare::rho1_conditioned_limit(0.0, 1.0) == 0.0);
    CHECK(rare::rho1_conditioned_limit(1.0 / 6.0, 1.0) ==
          doctest::Approx(1.0 / 18.0).epsilon(1e-13));
    CHECK(rare::rho1_conditioned_limit(5.0, 2.0) ==
          doctest::Approx(8.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("de-poissonization gap bound") {
    CHECK(rare::poissonization_gap_bound(100, 0.5, 1.0) == 0.0);
    CHECK(rare::poissonization_gap_bound(1e6, 1e2, 1.0) ==
          doctest::Approx(2.0 * std::exp(2.0) * 1e-4).epsilon(1e-13));
    CHECK(rare::poissonization_gap_bound(1e8, 1e2, 1.0) <
          rare::poissonization_gap_bound(1e6, 1e2, 1.0));
}

TEST_CASE("conditioned occupancy simulation") {
    const double n = 1e6, rho = 2.0, alpha = 0.22;
    // full window reproduces the unconditioned estimator
    auto full = rare::conditional_occupancy_experiment(n, rho, 0.0, INFINITY, 1.0, alpha,
                                                       20000, 808, 0);
    // disjoint windows add up
    const double mid = 1.0;
    auto lo = rare::conditional_occupancy_experiment(n, rho, 0.0, mid, 1.0, alpha, 20000,
                                                     808, 100000);
    auto hi = rare::conditional_occupancy_experiment(n, rho, mid, INFINITY, 1.0, alpha,
                                                     20000, 808, 200000);
    const double comb_se = std::sqrt(lo.stderr_ * lo.stderr_ + hi.stderr_ * hi.stderr_ +
                                     full.stderr_ * full.stderr_);
    CHECK(std::abs(lo.value + hi.value - full.value) <= 3.0 * comb_se);

    // window around delta1 log n vs the conditioned quadrature, bridged by the
    // poissonization bound and the representation-bias estimate
    const double d1 = (1.0 - alpha * (rho + 1.0)) / rho;
    const double b0 = d1 * std::log(n);
    auto est = rare::conditional_occupancy_experiment(n, rho, b0 - 1.0, b0 + 1.0, 1.0,
                                                      alpha, 40000, 808, 300000);
    const double kmax = std::floor(std::pow(n, alpha));
    auto qhi = rare::conditioned_exp_sum(n, kmax, rho, b0 + 1.0);
    auto qlo = rare::conditioned_exp_sum(n, kmax, rho, b0 - 1.0);
    const double ref = qhi.value - qlo.value;
    const double tol = 3.0 * est.stderr_ +
                       rare::poissonization_gap_bound(n, std::pow(n, alpha), 1.0) +
                       qhi.error_estimate + qlo.error_estimate;
    CHECK(std::abs(est.value - ref) <= tol);
    CHECK_THROWS_AS(rare::conditional_occupancy_experiment(n, rho, 2.0, 2.0, 1.0, alpha,
                                                           10, 808, 0),
                    std::invalid_argument);
}
