#include "yule/limits.hpp"

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace yule::limits {

namespace {

// E[g(W)] for W ~ Exp(1): integrate g(w) e^{-w} over (0, infinity).  The
// double-exponential rule handles both the decaying tail and any essential
// flattening of g near w = 0.
template <class G>
double exponential_mixture(G&& g, const QuadratureSpec& quad) {
    boost::math::quadrature::exp_sinh<double> integrator(quad.max_subdivisions);
    double err = 0.0;
    double l1 = 0.0;
    auto f = [&](double w) { return g(w) * std::exp(-w); };
    double val = integrator.integrate(f, quad.relative_tolerance, &err, &l1);
    if (!(err <= 1e-6 * std::max(1.0, std::abs(val))))
        throw QuadratureError("exponential mixture quadrature did not converge", err);
    return val;
}

}  // namespace

double tn_cdf(std::size_t n, double x) {
    if (x <= 0.0) return 0.0;
    return std::pow(-std::expm1(-x), static_cast<double>(n));
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

double nu_survival_limit(double x, double rho, const QuadratureSpec& quad) {
    if (rho <= 0.0) throw std::invalid_argument("nu_survival_limit: rho must be > 0");
    if (x <= 0.0) return 1.0;
    const double c = std::pow(x, rho + 2.0) / (rho * (rho + 2.0));
    return exponential_mixture(
        [&](double w) { return w <= 0.0 ? 0.0 : std::exp(-c * std::pow(w, -rho)); }, quad);
}

ExtendedReal mean_count_limit(double x, double rho) {
    if (rho <= 0.0) throw std::invalid_argument("mean_count_limit: rho must be > 0");
    if (rho >= 1.0) return {0.0, true};
    if (x <= 0.0) return {0.0, false};
    return {std::pow(x, rho + 2.0) * boost::math::tgamma(1.0 - rho) / (rho * (rho + 2.0)),
            false};
}

double mixed_poisson_count_pmf(unsigned j, double x, double rho,
                               const QuadratureSpec& quad) {
    const double c = std::pow(x, rho + 2.0) / (rho * (rho + 2.0));
    const double lgf = std::lgamma(static_cast<double>(j) + 1.0);
    return exponential_mixture(
        [&](double w) {
            if (w <= 0.0) return 0.0;
            const double lam = c * std::pow(w, -rho);
            return std::exp(static_cast<double>(j) * std::log(lam) - lam - lgf);
        },
        quad);
}

double laplace_functional_limit(double a, double b, double theta, double rho,
                                const QuadratureSpec& quad) {
    if (a <= 0.0 || b <= 0.0 || theta <= 0.0)
        throw std::invalid_argument("laplace_functional_limit: a, b, theta must be > 0");
    // inner integral of (1-e^{-theta}) x^{rho+1}/rho over [0,a]x[0,b]
    const double c = (-std::expm1(-theta)) * b * std::pow(a, rho + 2.0) / (rho * (rho + 2.0));
    return exponential_mixture(
        [&](double w) { return w <= 0.0 ? 0.0 : std::exp(-c * std::pow(w, -rho)); },
        quad);
}

double det_limit_intensity(double u, double v, double alpha_coeff, double delta) {
    if (delta <= 1.0) throw std::invalid_argument("det_limit_intensity: delta must be > 1");
    return std::pow(alpha_coeff * delta, 1.0 / delta) * (std::exp(v) - std::exp(u));
}

double expected_inv_d_rho(double rho) {
    if (rho < 1.0) throw std::invalid_argument("expected_inv_d_rho: rho must be >= 1");
    const double k = std::floor(rho);
    return boost::math::tgamma(k + 1.0 - rho) / boost::math::tgamma(k + 1.0);
}

}  // namespace yule::limits
