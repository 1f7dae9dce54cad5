#include "yule/rare.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "yule/model.hpp"

namespace yule::rare {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using boost::math::quadrature::gauss_kronrod;

template <class F>
double integrate(F&& f, double lo, double hi, const limits::QuadratureSpec& quad) {
    double err = 0.0;
    double val = gauss_kronrod<double, 31>::integrate(f, lo, hi, quad.max_subdivisions,
                                                      quad.relative_tolerance, &err);
    return val;
}

// E_G[h(G)] for G ~ Gamma(k+1, 1).
template <class H>
double gamma_expect(std::size_t k, H&& h, const limits::QuadratureSpec& quad) {
    const double lg = std::lgamma(static_cast<double>(k) + 1.0);
    auto f = [&](double g) {
        if (g <= 0.0) return 0.0;
        return h(g) * std::exp(static_cast<double>(k) * std::log(g) - g - lg);
    };
    return integrate(f, 0.0, kInf, quad);
}

// int over the window of u^{1/rho-1} g(u) du, with the u = y^rho substitution
// below u = 1 and u = e^s above; g must be bounded on the window.  The
// double-exponential rules tolerate integrands that vanish at a window
// endpoint, where an adaptive rule with a relative target subdivides forever.
template <class G>
double u_weighted_integral(double lo, double hi, double rho, G&& g,
                           const limits::QuadratureSpec& quad) {
    if (!(hi > lo)) return 0.0;
    boost::math::quadrature::tanh_sinh<double> finite_rule;
    double total = 0.0;
    if (lo < 1.0) {
        const double ylo = std::pow(lo, 1.0 / rho);
        const double yhi = std::pow(std::min(hi, 1.0), 1.0 / rho);
        total += rho * finite_rule.integrate([&](double y) { return g(std::pow(y, rho)); },
                                             ylo, yhi, quad.relative_tolerance);
    }
    if (hi > 1.0) {
        const double slo = std::log(std::max(lo, 1.0));
        auto f = [&](double s) {
            const double u = std::exp(s);
            if (!std::isfinite(u)) return 0.0;
            return std::exp(s / rho) * g(u);
        };
        if (std::isfinite(hi)) {
            total += finite_rule.integrate(f, slo, std::log(hi), quad.relative_tolerance);
        } else {
            boost::math::quadrature::exp_sinh<double> tail_rule;
            total += tail_rule.integrate(f, slo, kInf, quad.relative_tolerance);
        }
    }
    return total;
}

}  // namespace

bool RegimeSpec::valid() const {
    if (rho < 1.0 || x <= 0.0) return false;
    return alpha >= 1.0 / (2.0 * rho + 1.0) && alpha < 1.0 / (rho + 2.0);
}

double j_integral(double u, double rho, const limits::QuadratureSpec& quad) {
    const auto k = static_cast<std::size_t>(std::floor(rho));
    auto inner = [&](double v) {
        const double a = std::pow(v, rho + 1.0);
        // the exponential factor in the tail representation has mean rho, so the
        // denominator carries rho * u * D rather than u * D
        return gamma_expect(
            k,
            [&](double g) {
                const double t = rho * u * std::pow(g, rho);
                if (!std::isfinite(t)) return 0.0;  // overflow at extreme nodes
                return a / (a + t);
            },
            quad);
    };
    return integrate(inner, 0.0, 1.0, quad);
}

double case3_integral(double rho, double lower, const limits::QuadratureSpec& quad) {
    return u_weighted_integral(lower, kInf, rho,
                               [&](double u) { return j_integral(u, rho, quad); }, quad);
}

double exp_term_asymptotic(double i, double n, double rho, std::optional<double> b,
                           const limits::QuadratureSpec& quad) {
    const auto k = static_cast<std::size_t>(std::floor(rho));
    const double c = std::pow(i, rho + 1.0) / n;
    // substitute w = e^{-t_K}: density K (1-w)^{K-1} on (0,1); t <= b <=> w >= e^{-b}
    const double wlo = b ? std::exp(-*b) : 0.0;
    auto f = [&](double w) {
        const double ew = std::pow(w, rho);  // e^{-rho t}
        const double val = gamma_expect(
            k,
            [&](double g) {
                const double t = rho * ew * std::pow(g, rho);
                if (!std::isfinite(t)) return 0.0;
                return c / (c + t);
            },
            quad);
        return val * static_cast<double>(k) * std::pow(1.0 - w, static_cast<double>(k) - 1.0);
    };
    return integrate(f, wlo, 1.0, quad);
}

double exp_term_exact(std::size_t i, double n, double rho,
                      const limits::QuadratureSpec& quad) {
    const double shape = static_cast<double>(i) / rho;  // Z_i/i has CDF 1-(1-z)^{i/rho}
    // E[e^{-lam Z}] with Z-density shape (1-z)^{shape-1} on (0,1)
    auto inner = [&](double lam) {
        if (lam <= 0.0) return 1.0;
        const double cut = std::min(lam, 700.0);
        const double v = integrate(
            [&](double y) {
                const double r = -y / lam;
                if (r <= -1.0) return 0.0;
                return std::exp(-y + (shape - 1.0) * std::log1p(r));
            },
            0.0, cut, quad);
        return shape / lam * v;
    };
    if (i == 1) return inner(n);
    // outer over t_{i-1}, substituted w = e^{-t}: density (i-1)(1-w)^{i-2}
    const double m = static_cast<double>(i - 1);
    auto f = [&](double w) {
        if (w <= 0.0 || w >= 1.0) return 0.0;
        return inner(n * std::pow(w, rho)) * m *
               std::exp((m - 1.0) * std::log1p(-w));
    };
    return integrate(f, 0.0, 1.0, quad);
}

namespace {

ExpectedCountResult eg_quadrature(double n, double k_max, double rho,
                                  std::optional<double> b) {
    const auto K = static_cast<std::size_t>(std::floor(rho));
    limits::QuadratureSpec quad;
    quad.relative_tolerance = 1e-8;
    const double eps = k_max * std::pow(n, -1.0 / (rho + 1.0));
    const double u1 = std::pow(eps, -(rho + 1.0));
    const double u0 = b ? std::exp(-rho * *b) * u1 : 0.0;
    const double beta = std::pow(eps, (rho + 1.0) / rho);
    const double log_beta = std::log(beta);
    auto g = [&](double u) {
        // 1 - beta u^{1/rho} evaluated in log space: the window can sit where
        // this factor is ~1e-8 and the naive difference is pure roundoff noise
        const double fac = -std::expm1(log_beta + std::log(u) / rho);
        if (fac <= 0.0 && K >= 2) return 0.0;
        return std::pow(std::max(fac, 0.0), static_cast<double>(K) - 1.0) *
               j_integral(u, rho, quad);
    };
    const double core = u_weighted_integral(u0, u1, rho, g, quad);
    ExpectedCountResult res;
    res.method = Method::quadrature;
    res.n = n;
    res.value = static_cast<double>(K) / rho * std::pow(n, 1.0 / (rho + 1.0)) *
                std::pow(eps, (2.0 * rho + 1.0) / rho) * core;
    // bias of the i -> infinity factorization plus sum-to-integral discretization;
    // the leading constant is calibrated against the mc-oracle at small k_max
    res.error_estimate =
        res.value * (quad.relative_tolerance + 2.0 * (eps + rho / k_max));
    return res;
}

ExpectedCountResult eg_mc(double n, double k_max, double rho, std::optional<double> b,
                          Rng& rng, std::size_t reps) {
    const auto K = static_cast<std::size_t>(std::floor(rho));
    const auto kmax = static_cast<std::size_t>(k_max);
    const double mass = b ? std::pow(-std::expm1(-*b), static_cast<double>(K)) : 1.0;
    double s = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        double t = b ? model::sample_t_k_conditional(K, 0.0, *b, rng)
                     : model::sample_t_k_conditional(K, 0.0, kInf, rng);
        double sum = 0.0;
        for (std::size_t i = K + 1; i <= kmax; ++i) {
            const double di = static_cast<double>(i);
            const double e = rng.exponential();
            const double p = std::exp(-rho * t) * (-std::expm1(-rho * e / di));
            sum += std::exp(-n * p);
            t += e / di;  // t_i, the left endpoint of the next bin
        }
        s += sum;
        s2 += sum * sum;
    }
    const double m = static_cast<double>(reps);
    ExpectedCountResult res;
    res.method = Method::mc_oracle;
    res.n = n;
    res.value = mass * s / m;
    const double var = std::max(0.0, s2 / m - (s / m) * (s / m));
    res.error_estimate = mass * std::sqrt(var / m);
    return res;
}

}  // namespace

ExpectedCountResult expected_exp_sum(double n, double k_max, double rho, Method method,
                                     Rng* rng, std::size_t mc_replications) {
    if (rho < 1.0) throw std::invalid_argument("expected_exp_sum: rho must be >= 1");
    if (k_max <= std::floor(rho)) return {0.0, method, 0.0, n};
    if (method == Method::quadrature) return eg_quadrature(n, k_max, rho, std::nullopt);
    if (!rng) throw std::invalid_argument("expected_exp_sum: mc-oracle needs an rng");
    return eg_mc(n, k_max, rho, std::nullopt, *rng, mc_replications);
}

ExpectedCountResult conditioned_exp_sum(double n, double k_max, double rho, double b,
                                        Method method, Rng* rng,
                                        std::size_t mc_replications) {
    if (rho < 1.0) throw std::invalid_argument("conditioned_exp_sum: rho must be >= 1");
    if (b <= 0.0) return {0.0, method, 0.0, n};
    if (k_max <= std::floor(rho)) return {0.0, method, 0.0, n};
    if (method == Method::quadrature) return eg_quadrature(n, k_max, rho, b);
    if (!rng) throw std::invalid_argument("conditioned_exp_sum: mc-oracle needs an rng");
    return eg_mc(n, k_max, rho, b, *rng, mc_replications);
}

RegimePrediction regime_prediction(const RegimeSpec& spec) {
    if (spec.rho == 1.0)
        throw std::invalid_argument("regime_prediction: rho = 1 uses rho1_conditioned_limit");
    if (!spec.valid()) throw std::invalid_argument("regime_prediction: spec out of range");
    const double d0 = spec.delta0(), d1 = spec.delta1();
    const auto K = static_cast<double>(std::floor(spec.rho));
    RegimePrediction pred;
    if (spec.delta < d0) {
        pred.case_id = 1;
        pred.exponent = {0.0, true};  // decays to zero: exponent is -infinity
        pred.prefactor = {0.0, false};
        return pred;
    }
    if (spec.delta < d1) {
        pred.case_id = 2;
        pred.exponent = {(spec.rho + 2.0) * spec.alpha + spec.delta * (spec.rho - 1.0) - 1.0,
                         false};
        pred.prefactor = {std::pow(spec.x, spec.rho + 2.0) / (spec.rho + 2.0) * K /
                              ((spec.rho - 1.0) * spec.rho) *
                              limits::expected_inv_d_rho(spec.rho) *
                              std::exp((spec.rho - 1.0) * spec.a_shift),
                          false};
        return pred;
    }
    pred.case_id = 3;
    pred.exponent = {((2.0 * spec.rho + 1.0) * spec.alpha - 1.0) / spec.rho, false};
    const double lower = (spec.delta == d1) ? std::exp(-spec.rho * spec.a_shift) : 0.0;
    pred.prefactor = {std::pow(spec.x, (2.0 * spec.rho + 1.0) / spec.rho) * K / spec.rho *
                          case3_integral(spec.rho, lower),
                      false};
    return pred;
}

double psi_ratio(double y, double z, double rho, double x,
                 const limits::QuadratureSpec& quad) {
    if (rho <= 1.0) throw std::invalid_argument("psi_ratio: rho must be > 1");
    if (!(y < z)) throw std::invalid_argument("psi_ratio: need y < z");
    if (x <= 0.0) throw std::invalid_argument("psi_ratio: x must be > 0");
    const double lo = std::isinf(z) ? 0.0 : std::exp(-rho * z);
    const double hi = std::isinf(y) ? kInf : std::exp(-rho * y);
    const double pre = std::pow(x, (2.0 * rho + 1.0) / rho);
    const double win = pre * u_weighted_integral(
                                lo, hi, rho,
                                [&](double u) { return j_integral(u, rho, quad); }, quad);
    return win / (pre * case3_integral(rho, 0.0, quad));
}

double rho1_conditioned_limit(double a, double x) {
    if (a <= 0.0) return 0.0;
    return std::min(a, 1.0 / 3.0) / 3.0 * x * x * x * limits::expected_inv_d_rho(1.0);
}

double poissonization_gap_bound(double n, double phi_n, double x) {
    return 2.0 * std::exp(2.0) * std::floor(x * phi_n) / n;
}

ppstats::EstimateWithCI conditional_occupancy_experiment(
    double n, double rho, double window_lo, double window_hi, double x, double alpha,
    std::size_t replications, std::uint64_t master_seed, std::uint64_t stream_offset) {
    const auto K = static_cast<std::size_t>(std::floor(rho));
    const auto kmax = static_cast<std::size_t>(std::floor(x * std::pow(n, alpha)));
    const double flo = window_lo <= 0.0 ? 0.0
                                        : std::pow(-std::expm1(-window_lo),
                                                   static_cast<double>(K));
    const double fhi = std::isfinite(window_hi)
                           ? std::pow(-std::expm1(-window_hi), static_cast<double>(K))
                           : 1.0;
    const double mass = fhi - flo;
    if (mass <= 0.0)
        throw std::invalid_argument("conditional_occupancy_experiment: zero-mass window");
    double s = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < replications; ++r) {
        Rng rng(RngStream{master_seed, stream_offset + r});
        double t = model::sample_t_k_conditional(K, window_lo, window_hi, rng);
        long long empties = 0;
        for (std::size_t i = K + 1; i <= kmax; ++i) {
            const double di = static_cast<double>(i);
            const double e = rng.exponential();
            const double p = std::exp(-rho * t) * (-std::expm1(-rho * e / di));
            if (rng.poisson(n * p) == 0) ++empties;
            t += e / di;
        }
        const double v = static_cast<double>(empties);
        s += v;
        s2 += v * v;
    }
    const double m = static_cast<double>(replications);
    ppstats::EstimateWithCI est;
    est.value = mass * s / m;
    const double var = std::max(0.0, s2 / m - (s / m) * (s / m));
    est.stderr_ = mass * std::sqrt(var / m);
    est.n_replications = replications;
    est.seed = master_seed;
    est.method = "conditioned-poissonized-mc";
    return est;
}

}  // namespace yule::rare
