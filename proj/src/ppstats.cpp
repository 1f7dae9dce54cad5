#include "yule/ppstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace yule::ppstats {

std::string GofReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"law_id\":\"" << law_id << "\",\"statistic\":" << statistic
       << ",\"p_value\":" << p_value << ",\"n\":" << n << "}";
    return os.str();
}

double kolmogorov_sf(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 1.0) {
        // theta-function form of the CDF, which converges fast for small t
        double cdf = 0.0;
        for (int k = 1; k <= 200; ++k) {
            const double term =
                std::exp(-(2.0 * k - 1.0) * (2.0 * k - 1.0) * M_PI * M_PI / (8.0 * t * t));
            cdf += term;
            if (term < 1e-16 * cdf) break;
        }
        cdf *= std::sqrt(2.0 * M_PI) / t;
        return std::min(1.0, std::max(0.0, 1.0 - cdf));
    }
    double s = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        s += (k % 2 == 1) ? term : -term;
        if (term < 1e-10) break;
    }
    return std::min(1.0, std::max(0.0, 2.0 * s));
}

GofReport ks_test(const ReplicatedSamples& samples,
                  const std::function<double(double)>& cdf,
                  const std::string& law_id) {
    const std::size_t n = samples.values.size();
    if (n < 50) throw std::invalid_argument("ks_test: need at least 50 samples");
    std::vector<double> sorted = samples.values;
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, std::max(static_cast<double>(i + 1) / n - f,
                                 f - static_cast<double>(i) / n));
    }
    GofReport rep;
    rep.statistic = d;
    rep.n = n;
    rep.law_id = law_id;
    rep.p_value = kolmogorov_sf(std::sqrt(static_cast<double>(n)) * d);
    return rep;
}

namespace {

std::size_t rect_count(const model::ScaledPointProcess& pp, const Rectangle& rect) {
    std::size_t c = 0;
    if (pp.dimension == 2) {
        for (const auto& [x, y] : pp.pairs)
            if (x >= rect.x_lo && x <= rect.x_hi && y >= rect.y_lo && y <= rect.y_hi) ++c;
    } else {
        for (double x : pp.points)
            if (x >= rect.x_lo && x <= rect.x_hi) ++c;
    }
    return c;
}

}  // namespace

EstimateWithCI empirical_laplace_functional(
    const std::vector<model::ScaledPointProcess>& reps, const Rectangle& rect,
    double theta) {
    if (reps.size() < 100)
        throw std::invalid_argument("empirical_laplace_functional: need >= 100 replications");
    double s = 0.0, s2 = 0.0;
    for (const auto& pp : reps) {
        const double v = std::exp(-theta * static_cast<double>(rect_count(pp, rect)));
        s += v;
        s2 += v * v;
    }
    const double m = static_cast<double>(reps.size());
    EstimateWithCI est;
    est.value = s / m;
    est.stderr_ = std::sqrt(std::max(0.0, s2 / m - est.value * est.value) / m);
    est.n_replications = reps.size();
    est.method = "mc";
    return est;
}

GofReport count_pmf_test(const std::vector<long long>& counts,
                         const std::function<double(unsigned)>& pmf,
                         const std::string& law_id) {
    const std::size_t n = counts.size();
    if (n < 200) throw std::invalid_argument("count_pmf_test: need >= 200 counts");
    const long long cmax = *std::max_element(counts.begin(), counts.end());

    // Cell j covers count value j; the last cell absorbs the upper tail.
    // Merge adjacent cells upward until every expected count is >= 5.
    std::vector<double> expected;
    std::vector<long long> observed;
    std::vector<long long> hist(static_cast<std::size_t>(cmax) + 1, 0);
    for (long long c : counts) ++hist[static_cast<std::size_t>(c)];

    double probs_used = 0.0;
    double acc_e = 0.0;
    long long acc_o = 0;
    for (long long j = 0; j <= cmax; ++j) {
        const double pj = pmf(static_cast<unsigned>(j));
        probs_used += pj;
        acc_e += pj * static_cast<double>(n);
        acc_o += hist[static_cast<std::size_t>(j)];
        if (acc_e >= 5.0) {
            expected.push_back(acc_e);
            observed.push_back(acc_o);
            acc_e = 0.0;
            acc_o = 0;
        }
    }
    // tail cell: everything beyond cmax plus any leftover accumulation
    acc_e += (1.0 - probs_used) * static_cast<double>(n);
    if (!expected.empty() && acc_e < 5.0) {
        expected.back() += acc_e;
        observed.back() += acc_o;
    } else {
        expected.push_back(acc_e);
        observed.push_back(acc_o);
    }
    if (expected.size() < 2)
        throw std::invalid_argument("count_pmf_test: degenerate cell structure");

    double chi2 = 0.0;
    for (std::size_t c = 0; c < expected.size(); ++c) {
        const double d = static_cast<double>(observed[c]) - expected[c];
        chi2 += d * d / expected[c];
    }
    GofReport rep;
    rep.statistic = chi2;
    rep.n = n;
    rep.law_id = law_id;
    const double dof = static_cast<double>(expected.size() - 1);
    rep.p_value = boost::math::gamma_q(dof / 2.0, chi2 / 2.0);
    return rep;
}

double dispersion_index(const std::vector<long long>& counts) {
    if (counts.size() < 2) throw std::invalid_argument("dispersion_index: need >= 2 counts");
    const double m = static_cast<double>(counts.size());
    double s = 0.0;
    for (long long c : counts) s += static_cast<double>(c);
    const double mean = s / m;
    if (mean == 0.0) throw std::invalid_argument("dispersion_index: zero mean");
    double ss = 0.0;
    for (long long c : counts) {
        const double d = static_cast<double>(c) - mean;
        ss += d * d;
    }
    return ss / (m - 1.0) / mean;
}

double lln_functional(const model::BinProbabilityVector& probvec, double n,
                      double kappa, const Rectangle& rect, double theta) {
    const double delta = probvec.rho + 1.0;
    const double scale = std::pow(n, -((1.0 + delta) * kappa - 1.0));
    const double nk = std::pow(n, kappa);
    double s = 0.0;
    for (std::size_t i = 1; i <= probvec.probs.size(); ++i) {
        const double di = static_cast<double>(i);
        const double x = di / nk;
        if (x < rect.x_lo || x > rect.x_hi) continue;
        // X_i = W_i^rho Z_i = i^{rho+1} P_i
        const double xi = std::pow(di, delta) * probvec.probs[i - 1];
        const double y = n * xi / std::pow(di, delta);
        if (y >= rect.y_lo && y <= rect.y_hi) s += theta;
    }
    return scale * s;
}

}  // namespace yule::ppstats
