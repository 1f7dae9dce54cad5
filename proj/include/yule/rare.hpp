#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "yule/limits.hpp"
#include "yule/ppstats.hpp"
#include "yule/rng.hpp"

namespace yule::rare {

// Parameters of the n^alpha-window empty-count regimes (rho >= 1):
// delta0 = (1 - alpha(rho+2)) / (rho-1), delta1 = (1 - alpha(rho+1)) / rho.
struct RegimeSpec {
    double rho = 2.0;
    double alpha = 0.22;
    double delta = 0.0;   // coefficient of log n in the t_floor(rho) conditioning
    double a_shift = 0.0;
    double x = 1.0;

    double delta0() const { return (1.0 - alpha * (rho + 2.0)) / (rho - 1.0); }
    double delta1() const { return (1.0 - alpha * (rho + 1.0)) / rho; }
    bool valid() const;
};

struct RegimePrediction {
    int case_id = 0;  // 1, 2, 3
    limits::ExtendedReal exponent;   // is_infinite marks the case-1 "decays to 0" verdict
    limits::ExtendedReal prefactor;
};

enum class Method { quadrature, mc_oracle };

struct ExpectedCountResult {
    double value = 0.0;
    Method method = Method::quadrature;
    double error_estimate = 0.0;
    double n = 0.0;
};

// J(u) = int_0^1 E_D[ v^{rho+1} / (v^{rho+1} + u D) ] dv with D = G^rho,
// G ~ Gamma(floor(rho)+1, 1).
double j_integral(double u, double rho, const limits::QuadratureSpec& quad = {});

// int_lower^inf u^{1/rho - 1} J(u) du (case-3 core; pi/5 at rho = 2, lower = 0).
double case3_integral(double rho, double lower = 0.0,
                      const limits::QuadratureSpec& quad = {});

// E(e^{-n P_i}) under the asymptotic factorization
// P_i = e^{-rho t_K} D E / i^{rho+1}, K = floor(rho); double quadrature over the
// exact t_K density and the Gamma law of D, t_K restricted to (0, b] if given.
double exp_term_asymptotic(double i, double n, double rho,
                           std::optional<double> b = std::nullopt,
                           const limits::QuadratureSpec& quad = {});

// E(e^{-n P_i}) from the exact finite-n law of (t_{i-1}, E_i); any rho > 0.
double exp_term_exact(std::size_t i, double n, double rho,
                      const limits::QuadratureSpec& quad = {});

// Sum_{i=K+1}^{k_max} E(e^{-n P_i}), integral form:
//   (K/rho) n^{1/(rho+1)} eps^{(2rho+1)/rho}
//     int_{u0}^{u1} u^{1/rho-1} (1 - eps^{(rho+1)/rho} u^{1/rho})_+^{K-1} J(u) du
// with eps = k_max / n^{1/(rho+1)}, u1 = eps^{-(rho+1)},
// u0 = e^{-rho b} u1 when conditioning on {t_K <= b}, else 0.
ExpectedCountResult expected_exp_sum(double n, double k_max, double rho,
                                     Method method, Rng* rng = nullptr,
                                     std::size_t mc_replications = 100000);

ExpectedCountResult conditioned_exp_sum(double n, double k_max, double rho, double b,
                                        Method method = Method::quadrature,
                                        Rng* rng = nullptr,
                                        std::size_t mc_replications = 100000);

RegimePrediction regime_prediction(const RegimeSpec& spec);

// psi(y, z): case-3 u-integral restricted to u in [e^{-rho z}, e^{-rho y}]
// over the full-range integral; pass +-infinity for unbounded ends. The
// x^{(2rho+1)/rho} prefactor enters both integrals and cancels.
double psi_ratio(double y, double z, double rho, double x = 1.0,
                 const limits::QuadratureSpec& quad = {});

// (min(a, 1/3) / 3) x^3 E(1/D_1): the rho = 1 critical conditioned limit.
double rho1_conditioned_limit(double a, double x);

// 2 e^2 floor(x phi_n) / n: the de-poissonization tolerance bridge.
double poissonization_gap_bound(double n, double phi_n, double x);

// Simulated E(N 1{t_K in window}): t_K by conditional inverse-CDF, later
// increments free, poissonized occupancy, empty bins counted over
// (K, x n^alpha]; the mean is multiplied by the window mass.
ppstats::EstimateWithCI conditional_occupancy_experiment(
    double n, double rho, double window_lo, double window_hi, double x,
    double alpha, std::size_t replications, std::uint64_t master_seed,
    std::uint64_t stream_offset = 0);

}  // namespace yule::rare
