#include "yule/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/zeta.hpp>

namespace yule::model {

double ScaleDescriptor::phi() const {
    double v = factor * std::pow(n, exponent);
    if (log_power != 0.0) v *= std::pow(std::log(n), -log_power);
    return v;
}

void sample_splits_into(std::size_t n_bins, Rng& rng, SplitSequence& out) {
    out.n_bins = n_bins;
    out.increments.resize(n_bins);
    out.times.resize(n_bins);
    out.martingale.resize(n_bins);
    double t = 0.0;
    for (std::size_t i = 1; i <= n_bins; ++i) {
        double e = rng.exponential();
        out.increments[i - 1] = e;
        t += e / static_cast<double>(i);
        out.times[i - 1] = t;
        out.martingale[i - 1] = t - std::log(static_cast<double>(i));
    }
}

SplitSequence sample_splits(std::size_t n_bins, Rng& rng) {
    SplitSequence s;
    sample_splits_into(n_bins, rng, s);
    return s;
}

BinProbabilityVector bin_probabilities(const SplitSequence& splits, double rho) {
    if (rho <= 0.0) throw std::invalid_argument("bin_probabilities: rho must be > 0");
    const std::size_t n = splits.n_bins;
    BinProbabilityVector pv;
    pv.rho = rho;
    pv.source_tag = ProbSource::yule;
    pv.probs.resize(n);
    pv.w_values.resize(n);
    pv.z_values.resize(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const double di = static_cast<double>(i);
        // P_i = e^{-rho t_{i-1}} (1 - e^{-rho E_i / i}); t_0 = 0.
        const double t_prev = (i == 1) ? 0.0 : splits.times[i - 2];
        const double p = std::exp(-rho * t_prev) * (-std::expm1(-rho * splits.increments[i - 1] / di));
        pv.probs[i - 1] = p;
        // centered at log i (not log(i-1)) so the W^rho Z / i^{rho+1} form is an
        // exact identity at every finite index, with W_1 = 1
        pv.w_values[i - 1] = di * std::exp(-t_prev);
        pv.z_values[i - 1] = di * (-std::expm1(-rho * splits.increments[i - 1] / di));
    }
    // Mass beyond the truncation: sum_{i>n} P_i = e^{-rho t_n}.
    pv.tail_mass = std::exp(-rho * splits.times[n - 1]);
    return pv;
}

namespace {

// sum_{i>n} i^{-delta} via Euler-Maclaurin; for small n the zeta difference
// is cheaper and exact enough.
double power_tail(double delta, std::size_t n) {
    if (n < 64) {
        double head = 0.0;
        for (std::size_t i = 1; i <= n; ++i) head += std::pow(static_cast<double>(i), -delta);
        return boost::math::zeta(delta) - head;
    }
    const double m = static_cast<double>(n);
    // int_n^inf x^-d dx + n^-d/2 - d n^{-d-1}/12 + d(d+1)(d+2) n^{-d-3}/720
    return std::pow(m, 1.0 - delta) / (delta - 1.0) - 0.5 * std::pow(m, -delta) +
           delta * std::pow(m, -delta - 1.0) / 12.0 -
           delta * (delta + 1.0) * (delta + 2.0) * std::pow(m, -delta - 3.0) / 720.0;
}

}  // namespace

BinProbabilityVector deterministic_power_law(double alpha_coeff, double delta,
                                             std::size_t n_bins) {
    if (delta <= 1.0) throw std::invalid_argument("deterministic_power_law: delta must be > 1");
    BinProbabilityVector pv;
    pv.rho = 0.0;
    pv.source_tag = ProbSource::deterministic_power_law;
    pv.probs.resize(n_bins);
    const double z = boost::math::zeta(delta);
    // alpha_coeff is informative; mass is normalized by zeta(delta) so the
    // full infinite vector sums to one regardless.
    const double norm = 1.0 / z;
    (void)alpha_coeff;
    for (std::size_t i = 1; i <= n_bins; ++i)
        pv.probs[i - 1] = norm * std::pow(static_cast<double>(i), -delta);
    pv.tail_mass = norm * power_tail(delta, n_bins);
    return pv;
}

OccupancyCounts throw_balls(const BinProbabilityVector& probvec, long long n_balls,
                            ThrowMode mode, Rng& rng) {
    const std::size_t nb = probvec.probs.size();
    OccupancyCounts occ;
    occ.counts.assign(nb, 0);
    occ.n_balls_requested = n_balls;
    occ.mode = mode;
    if (mode == ThrowMode::poissonized) {
        const double mean = static_cast<double>(n_balls);
        long long total = 0;
        for (std::size_t i = 0; i < nb; ++i) {
            long long c = rng.poisson(mean * probvec.probs[i]);
            occ.counts[i] = c;
            total += c;
        }
        occ.tail_count = rng.poisson(mean * probvec.tail_mass);
        occ.realized_total = total + occ.tail_count;
        return occ;
    }
    // Exact multinomial: inverse-CDF lookup per ball on the cumulative vector.
    std::vector<double> cum(nb);
    double acc = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
        acc += probvec.probs[i];
        cum[i] = acc;
    }
    const double total_mass = acc + probvec.tail_mass;
    for (long long b = 0; b < n_balls; ++b) {
        const double u = rng.uniform() * total_mass;
        if (u > acc) {
            ++occ.tail_count;
            continue;
        }
        auto it = std::lower_bound(cum.begin(), cum.end(), u);
        ++occ.counts[static_cast<std::size_t>(it - cum.begin())];
    }
    occ.realized_total = n_balls;
    return occ;
}

ScaledPointProcess empty_bin_process(const OccupancyCounts& occ, long long level,
                                     const ScaleDescriptor& scale) {
    ScaledPointProcess pp;
    pp.dimension = 1;
    pp.scale = scale;
    const double phi = scale.phi();
    for (std::size_t i = 0; i < occ.counts.size(); ++i) {
        if (occ.counts[i] <= level)
            pp.points.push_back(static_cast<double>(i + 1) / phi - scale.shift);
    }
    return pp;
}

std::size_t first_empty_index(const OccupancyCounts& occ) {
    for (std::size_t i = 0; i < occ.counts.size(); ++i)
        if (occ.counts[i] == 0) return i + 1;
    throw TruncationError("first_empty_index: no empty bin within truncation");
}

ScaledPointProcess two_dim_process(const BinProbabilityVector& probvec, double n) {
    ScaledPointProcess pp;
    pp.dimension = 2;
    pp.scale.n = n;
    pp.scale.exponent = 1.0 / (probvec.rho + 2.0);
    const double phi = pp.scale.phi();
    for (std::size_t i = 0; i < probvec.probs.size(); ++i)
        pp.pairs.emplace_back(static_cast<double>(i + 1) / phi, n * probvec.probs[i]);
    return pp;
}

double sample_t_k_conditional(std::size_t k, double lo, double hi, Rng& rng) {
    if (k == 0) throw std::invalid_argument("sample_t_k_conditional: k must be >= 1");
    const double dk = static_cast<double>(k);
    // F(x) = (1-e^{-x})^k
    auto F = [&](double x) {
        if (x <= 0.0) return 0.0;
        if (!std::isfinite(x)) return 1.0;
        return std::pow(-std::expm1(-x), dk);
    };
    const double flo = F(lo), fhi = F(hi);
    if (fhi <= flo) throw std::invalid_argument("sample_t_k_conditional: empty window");
    const double u = flo + (fhi - flo) * rng.uniform();
    // invert: x = -log1p(-u^{1/k})
    return -std::log1p(-std::pow(u, 1.0 / dk));
}

double sample_d_rho(double rho, Rng& rng) {
    const auto k = static_cast<std::size_t>(std::floor(rho));
    // Gamma(k+1,1) as sum of k+1 unit exponentials, then raise to rho.
    double g = 0.0;
    for (std::size_t j = 0; j <= k; ++j) g += rng.exponential();
    return std::pow(g, rho);
}

double sample_d_rho_truncated(double rho, std::size_t n_trunc, Rng& rng) {
    const auto k = static_cast<std::size_t>(std::floor(rho));
    if (n_trunc <= k) throw std::invalid_argument("sample_d_rho_truncated: n_trunc must exceed floor(rho)");
    const double u = rng.uniform();
    const double q = boost::math::ibeta_inv(static_cast<double>(n_trunc - k),
                                            static_cast<double>(k + 1), u);
    const double t = -std::log1p(-q);  // t_N - t_k
    // M_N - M_k - log k telescopes to (t_N - t_k) - log N: the log k terms cancel
    return std::exp(-rho * (t - std::log(static_cast<double>(n_trunc))));
}

double sample_d_rho_truncated_brute(double rho, std::size_t n_trunc, Rng& rng) {
    const auto k = static_cast<std::size_t>(std::floor(rho));
    if (n_trunc <= k) throw std::invalid_argument("sample_d_rho_truncated_brute: n_trunc must exceed floor(rho)");
    double t = 0.0;
    for (std::size_t i = k + 1; i <= n_trunc; ++i)
        t += rng.exponential() / static_cast<double>(i);
    return std::exp(-rho * (t - std::log(static_cast<double>(n_trunc))));
}

void write_csv(const SplitSequence& splits, std::ostream& os) {
    os << "index,increment,time,martingale\r\n";
    for (std::size_t i = 0; i < splits.n_bins; ++i) {
        os << (i + 1) << ',' << splits.increments[i] << ',' << splits.times[i] << ','
           << splits.martingale[i] << "\r\n";
    }
}

void write_csv(const OccupancyCounts& occ, std::ostream& os) {
    os << "index,count\r\n";
    for (std::size_t i = 0; i < occ.counts.size(); ++i)
        os << (i + 1) << ',' << occ.counts[i] << "\r\n";
}

}  // namespace yule::model
