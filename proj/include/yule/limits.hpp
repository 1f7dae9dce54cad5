#pragma once

#include <cstddef>
#include <stdexcept>

namespace yule::limits {

struct QuadratureSpec {
    double relative_tolerance = 1e-9;
    std::size_t max_subdivisions = 15;
};

class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_error(achieved) {}
    double achieved_error;
};

// Value together with a distinguished +infinity marker (some expected counts
// diverge for rho >= 1).
struct ExtendedReal {
    double value = 0.0;
    bool is_infinite = false;
};

// CDF of the n-th split time: (1 - e^{-x})^n.
double tn_cdf(std::size_t n, double x);

// exp(-e^{-x}), the limit law of the centered split-time martingale.
double gumbel_cdf(double x);

// P(first empty index / n^{1/(rho+2)} > x) = E exp(-x^{rho+2} W^{-rho} / (rho(rho+2))),
// W standard exponential.
double nu_survival_limit(double x, double rho, const QuadratureSpec& quad = {});

// Unconditional mean number of empty bins below x on the n^{1/(rho+2)} scale:
// x^{rho+2} Gamma(1-rho) / (rho(rho+2)) for rho < 1, infinite otherwise.
ExtendedReal mean_count_limit(double x, double rho);

// P(N[0,x] = j) for the mixed Poisson limit with conditional mean
// w^{-rho} x^{rho+2} / (rho(rho+2)).
double mixed_poisson_count_pmf(unsigned j, double x, double rho,
                               const QuadratureSpec& quad = {});

// E exp(-theta N([0,a]x[0,b])) for the two-dimensional limit process with
// intensity e^{-w} dw x^{rho+1}/rho dx dy on the w-mixture.
double laplace_functional_limit(double a, double b, double theta, double rho,
                                const QuadratureSpec& quad = {});

// integral over [u,v] of (alpha delta)^{1/delta} e^x dx.
double det_limit_intensity(double u, double v, double alpha_coeff, double delta);

// Gamma(floor(rho)+1-rho) / Gamma(floor(rho)+1) = lim E(1/D_i).
double expected_inv_d_rho(double rho);

}  // namespace yule::limits
