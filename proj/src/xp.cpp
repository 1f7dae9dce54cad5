#include "yule/xp.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include "yule/limits.hpp"
#include "yule/model.hpp"
#include "yule/ppstats.hpp"
#include "yule/rare.hpp"
#include "yule/rng.hpp"

namespace yule::xp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- replication fan-out -------------------------------------------------

int hardware_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Evaluates fn(i) for i in [0, reps) across threads; the result vector is
// indexed by replication, so the subsequent reduction order is fixed and the
// output is independent of the thread count.
template <class T, class F>
std::vector<T> map_reps(std::size_t reps, int threads, F&& fn) {
    std::vector<T> out(reps);
    threads = std::max(1, std::min<int>(threads, static_cast<int>(reps)));
    if (threads == 1) {
        for (std::size_t i = 0; i < reps; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= reps) return;
                out[i] = fn(i);
            }
        });
    for (auto& th : pool) th.join();
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double n = static_cast<double>(v.size());
    return std::sqrt(ss / (n - 1.0) / n);
}

// least-squares slope and intercept of y on x
std::pair<double, double> linfit(const std::vector<double>& x,
                                 const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

// ---- artifact serialization ----------------------------------------------

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        q += c;
        if (c == '"') q += '"';
    }
    q += '"';
    return q;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

const std::array<const char*, 5> kParamCols = {"rho", "n", "x", "alpha", "delta"};

ResultRow make_row(std::string check, std::map<std::string, double> params,
                   double est, double se, double ref, std::string source, bool pass) {
    return ResultRow{std::move(check), std::move(params), est, se, ref,
                     std::move(source), pass};
}

// ---- shared simulation kernels -------------------------------------------

struct EmptyScanResult {
    double nu = 0.0;  // first empty index; 0 if truncated
    double count = 0.0;  // empty bins with index <= count_limit
    double w = 0.0;   // e^{-M_{N-1}} surrogate for W_infinity
};

// One poissonized replication: sample the environment, then per-bin
// zero-indicators (Bernoulli(e^{-n P_i}), the zero marginal of Poisson(n P_i)).
EmptyScanResult empty_scan(std::uint64_t seed, std::uint64_t stream, double n,
                           double rho, std::size_t n_bins, double count_limit) {
    Rng rng(RngStream{seed, stream});
    auto splits = model::sample_splits(n_bins, rng);
    auto pv = model::bin_probabilities(splits, rho);
    EmptyScanResult r;
    r.w = std::exp(-splits.martingale[n_bins - 2]);
    for (std::size_t i = 1; i <= n_bins; ++i) {
        const bool empty = rng.uniform() <= std::exp(-n * pv.probs[i - 1]);
        if (empty) {
            if (r.nu == 0.0) r.nu = static_cast<double>(i);
            if (static_cast<double>(i) <= count_limit) r.count += 1.0;
        }
    }
    return r;
}

// ---- experiments ----------------------------------------------------------

ExperimentOutput xp_model_checks(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const auto n_bins = static_cast<std::size_t>(cfg.get("n_bins", 1e5));
    const auto vectors = static_cast<std::size_t>(cfg.get("vectors", 100));
    const int threads = resolve_threads(cfg.threads);
    double worst_norm = 0.0, worst_decomp = 0.0;
    const double rhos[] = {0.5, 1.0, 2.0};
    for (std::size_t rx = 0; rx < 3; ++rx) {
        const double rho = rhos[rx];
        auto errs = map_reps<std::array<double, 2>>(vectors, threads, [&](std::size_t v) {
            Rng rng(RngStream{cfg.master_seed, rx * 1000000 + v});
            auto splits = model::sample_splits(n_bins, rng);
            auto pv = model::bin_probabilities(splits, rho);
            double s = 0.0, comp = 0.0;  // Kahan sum of probs
            double decomp = 0.0;
            for (std::size_t i = 1; i <= n_bins; ++i) {
                const double y = pv.probs[i - 1] - comp;
                const double t = s + y;
                comp = (t - s) - y;
                s = t;
                const double alt = std::pow(pv.w_values[i - 1], rho) * pv.z_values[i - 1] /
                                   std::pow(static_cast<double>(i), rho + 1.0);
                decomp = std::max(decomp,
                                  std::abs(alt - pv.probs[i - 1]) / pv.probs[i - 1]);
            }
            return std::array<double, 2>{std::abs(s + pv.tail_mass - 1.0), decomp};
        });
        double nmax = 0.0, dmax = 0.0;
        for (const auto& e : errs) {
            nmax = std::max(nmax, e[0]);
            dmax = std::max(dmax, e[1]);
        }
        out.rows.push_back(make_row("normalization_abs_error", {{"rho", rho}}, nmax, 0.0,
                                    0.0, "closed-form", nmax <= 1e-12));
        out.rows.push_back(make_row("decomposition_rel_error", {{"rho", rho}}, dmax, 0.0,
                                    0.0, "closed-form", dmax <= 1e-12));
        worst_norm = std::max(worst_norm, nmax);
        worst_decomp = std::max(worst_decomp, dmax);
    }
    out.criteria.push_back({"A1", worst_norm <= 1e-12 && worst_decomp <= 1e-12,
                            std::max(worst_norm, worst_decomp), 0.0, 1e-12,
                            "telescoping normalization and product/decomposition agreement"});
    return out;
}

ExperimentOutput xp_limit_law(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const auto reps = static_cast<std::size_t>(cfg.get("replications", 1e4));
    const auto ngum = static_cast<std::size_t>(cfg.get("n_gumbel", 1e5));
    const int threads = resolve_threads(cfg.threads);
    auto vals = map_reps<std::array<double, 4>>(reps, threads, [&](std::size_t r) {
        Rng rng(RngStream{cfg.master_seed, r});
        std::array<double, 4> v{};
        double t = 0.0;
        for (std::size_t i = 1; i <= ngum; ++i) {
            t += rng.exponential() / static_cast<double>(i);
            if (i == 1) v[0] = t;
            if (i == 10) v[1] = t;
            if (i == 100) v[2] = t;
        }
        v[3] = t - std::log(static_cast<double>(ngum));
        return v;
    });
    const std::size_t ns[] = {1, 10, 100};
    double min_p = 1.0;
    for (std::size_t c = 0; c < 3; ++c) {
        ppstats::ReplicatedSamples s;
        s.master_seed = cfg.master_seed;
        for (const auto& v : vals) s.values.push_back(v[c]);
        auto rep = ppstats::ks_test(
            s, [&](double x) { return limits::tn_cdf(ns[c], x); }, "tn_cdf");
        out.rows.push_back(make_row("ks_p_tn", {{"n", static_cast<double>(ns[c])}},
                                    rep.p_value, 0.0, 0.01, "closed-form",
                                    rep.p_value > 0.01));
        min_p = std::min(min_p, rep.p_value);
    }
    ppstats::ReplicatedSamples sm;
    sm.master_seed = cfg.master_seed;
    for (const auto& v : vals) sm.values.push_back(v[3]);
    auto grep = ppstats::ks_test(sm, limits::gumbel_cdf, "gumbel");
    out.rows.push_back(make_row("ks_stat_gumbel", {{"n", static_cast<double>(ngum)}},
                                grep.statistic, 0.0, 0.02, "closed-form",
                                grep.statistic < 0.02));
    out.criteria.push_back({"A2", min_p > 0.01 && grep.statistic < 0.02,
                            grep.statistic, 0.02, 0.02,
                            "split-time marginals and Gumbel martingale limit"});
    // empirical vs analytic CDF series for the martingale limit
    std::sort(sm.values.begin(), sm.values.end());
    std::ostringstream pd;
    pd << "x,empirical_cdf,gumbel_cdf\r\n";
    const std::size_t step = std::max<std::size_t>(1, sm.values.size() / 200);
    for (std::size_t i = 0; i < sm.values.size(); i += step) {
        pd << fmt(sm.values[i]) << ',' << fmt(static_cast<double>(i + 1) / reps) << ','
           << fmt(limits::gumbel_cdf(sm.values[i])) << "\r\n";
    }
    out.plotdata["gumbel_cdf.csv"] = pd.str();
    return out;
}

ExperimentOutput xp_first_empty(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double rho = cfg.get("rho", 1.0);
    const double n = cfg.get("n", 1e6);
    const auto reps = static_cast<std::size_t>(cfg.get("replications", 2000));
    const double scale = std::pow(n, 1.0 / (rho + 2.0));
    // W-surrogate quality needs a deep vector even though nu is tiny
    const auto n_bins = static_cast<std::size_t>(cfg.get("n_bins", 1e4));
    const double x4 = cfg.get("x_mean", 1.0);
    const int threads = resolve_threads(cfg.threads);
    auto res = map_reps<EmptyScanResult>(reps, threads, [&](std::size_t r) {
        return empty_scan(cfg.master_seed, r, n, rho, n_bins, x4 * scale);
    });
    for (const auto& r : res)
        if (r.nu == 0.0) out.truncation_flag = true;

    // survival of nu / n^{1/(rho+2)}
    bool a3 = true;
    double a3_worst = 0.0;
    std::ostringstream pd;
    pd << "x,empirical_survival,limit_survival\r\n";
    for (double x : {0.5, 1.0, 2.0}) {
        double cnt = 0.0;
        for (const auto& r : res)
            if (r.nu >= x * scale) cnt += 1.0;
        const double p = cnt / static_cast<double>(reps);
        const double ref = limits::nu_survival_limit(x, rho);
        const double sig = std::sqrt(ref * (1.0 - ref) / static_cast<double>(reps));
        const bool ok = std::abs(p - ref) <= 3.0 * sig;
        a3 = a3 && ok;
        a3_worst = std::max(a3_worst, std::abs(p - ref) / sig);
        out.rows.push_back(make_row("first_empty_survival",
                                    {{"rho", rho}, {"n", n}, {"x", x}}, p, sig, ref,
                                    "quadrature", ok));
        pd << fmt(x) << ',' << fmt(p) << ',' << fmt(ref) << "\r\n";
    }
    out.plotdata["first_empty_survival.csv"] = pd.str();
    out.criteria.push_back({"A3", a3, a3_worst, 3.0, 3.0,
                            "survival probabilities vs quadrature, in binomial sigmas"});

    // rate adjudication: count in [0, x4] is conditionally Poisson with mean
    // c x^{rho+2} W^{-rho} / (rho+2) where c is the contested rate factor.  The
    // linear model requires the predicted count to stay well below the number
    // of scanned bins, so the fit is decile-conditioned on W and deciles whose
    // predicted mean exceeds 10% of the scan window are outside the model's
    // validity range and excluded from the rate estimate.
    const double z_rate = 1.0 / (rho * (rho + 2.0));
    const double alt_rate = std::pow(rho * (rho + 2.0), -1.0 / (rho + 2.0));
    const double scan_len = x4 * scale;
    std::vector<std::size_t> idx(res.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return res[a].w < res[b].w; });
    const std::size_t dsz = res.size() / 10;
    std::ostringstream pdd;
    pdd << "decile,mean_count,predicted_mean,in_fit\r\n";
    double sc = 0.0, sz = 0.0;
    std::vector<char> kept(10, 0);
    for (std::size_t d = 0; d < 10; ++d) {
        double mc = 0.0, mz = 0.0;
        for (std::size_t j = d * dsz; j < (d + 1) * dsz; ++j) {
            mc += res[idx[j]].count;
            mz += std::pow(x4, rho + 2.0) / res[idx[j]].w;
        }
        kept[d] = z_rate * mz / static_cast<double>(dsz) <= 0.1 * scan_len;
        if (kept[d]) sc += mc, sz += mz;
        pdd << (d + 1) << ',' << fmt(mc / static_cast<double>(dsz)) << ','
            << fmt(z_rate * mz / static_cast<double>(dsz)) << ','
            << (kept[d] ? 1 : 0) << "\r\n";
    }
    out.plotdata["rate_by_w_decile.csv"] = pdd.str();
    const double ratio = sc / sz;
    double resid = 0.0;
    for (std::size_t d = 0; d < 10; ++d) {
        if (!kept[d]) continue;
        for (std::size_t j = d * dsz; j < (d + 1) * dsz; ++j) {
            const double dd =
                res[idx[j]].count - ratio * std::pow(x4, rho + 2.0) / res[idx[j]].w;
            resid += dd * dd;
        }
    }
    const double sigma_r = std::sqrt(resid) / sz;
    const bool a4 = std::abs(ratio - z_rate) <= 5.0 * sigma_r &&
                    std::abs(ratio - alt_rate) > 5.0 * sigma_r;
    out.rows.push_back(make_row("mean_count_rate_fit", {{"rho", rho}, {"n", n}, {"x", x4}},
                                ratio, sigma_r, z_rate, "quadrature", a4));
    std::ostringstream note;
    note.precision(4);
    note << "Laplace-transform rate 1/(rho(rho+2)) = " << z_rate
         << " adopted; alternative printed rate " << alt_rate << " rejected at "
         << std::abs(ratio - alt_rate) / sigma_r << " sigma";
    out.criteria.push_back({"A4", a4, ratio, z_rate, 5.0 * sigma_r, note.str()});
    return out;
}

ExperimentOutput xp_mixed_poisson(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double rho = cfg.get("rho", 0.5);
    const double n = cfg.get("n", 1e6);
    const double x = cfg.get("x", 1.0);
    const auto reps = static_cast<std::size_t>(cfg.get("replications", 2000));
    const double scale = std::pow(n, 1.0 / (rho + 2.0));
    const auto n_bins = static_cast<std::size_t>(
        cfg.get("n_bins", std::max(64.0, std::ceil(10.0 * x * scale))));
    const int threads = resolve_threads(cfg.threads);
    auto res = map_reps<EmptyScanResult>(reps, threads, [&](std::size_t r) {
        return empty_scan(cfg.master_seed, r, n, rho, n_bins, x * scale);
    });
    std::vector<double> counts;
    std::vector<long long> icounts;
    for (const auto& r : res) {
        counts.push_back(r.count);
        icounts.push_back(static_cast<long long>(r.count));
    }
    const double mean = mean_of(counts);
    const double se = stderr_of(counts);
    const auto ref = limits::mean_count_limit(x, rho);
    const bool mean_ok =
        std::abs(mean - ref.value) <= std::max(0.05 * ref.value, 3.0 * se);
    out.rows.push_back(make_row("empty_count_mean", {{"rho", rho}, {"n", n}, {"x", x}},
                                mean, se, ref.value, "closed-form", mean_ok));
    // dispersion > 1 at 3 sigma, sigma from 10 replication batches
    const double disp = ppstats::dispersion_index(icounts);
    std::vector<double> batch;
    const std::size_t bs = reps / 10;
    for (std::size_t b = 0; b < 10; ++b) {
        std::vector<long long> chunk(icounts.begin() + b * bs,
                                     icounts.begin() + (b + 1) * bs);
        batch.push_back(ppstats::dispersion_index(chunk));
    }
    const double dse = stderr_of(batch);
    const bool disp_ok = disp > 1.0 + 3.0 * dse;
    out.rows.push_back(make_row("dispersion_index", {{"rho", rho}, {"n", n}, {"x", x}},
                                disp, dse, 1.0, "closed-form", disp_ok));
    out.criteria.push_back({"A5", mean_ok && disp_ok, mean, ref.value,
                            std::max(0.05 * ref.value, 3.0 * se),
                            "mean empty count vs Gamma(1-rho) form; overdispersion"});
    // empirical pmf vs mixed-Poisson quadrature pmf
    std::ostringstream pd;
    pd << "j,empirical,mixed_poisson_pmf\r\n";
    for (unsigned j = 0; j <= 8; ++j) {
        double f = 0.0;
        for (long long c : icounts)
            if (c == static_cast<long long>(j)) f += 1.0;
        pd << j << ',' << fmt(f / static_cast<double>(reps)) << ','
           << fmt(limits::mixed_poisson_count_pmf(j, x, rho)) << "\r\n";
    }
    out.plotdata["count_pmf.csv"] = pd.str();
    return out;
}

ExperimentOutput xp_two_dim_pp(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double rho = cfg.get("rho", 1.0);
    const double n = cfg.get("n", 1e6);
    const auto reps = static_cast<std::size_t>(cfg.get("replications", 400));
    const double a = cfg.get("a", 1.0), b = cfg.get("b", 1.0);
    const auto n_bins = static_cast<std::size_t>(cfg.get(
        "n_bins", std::max(64.0, std::ceil(10.0 * a * std::pow(n, 1.0 / (rho + 2.0))))));
    const int threads = resolve_threads(cfg.threads);
    auto counts = map_reps<double>(reps, threads, [&](std::size_t r) {
        Rng rng(RngStream{cfg.master_seed, r});
        auto splits = model::sample_splits(n_bins, rng);
        auto pv = model::bin_probabilities(splits, rho);
        auto pp = model::two_dim_process(pv, n);
        double c = 0.0;
        for (const auto& [px, py] : pp.pairs)
            if (px <= a && py <= b) c += 1.0;
        return c;
    });
    for (double theta : {0.5, 1.0, 2.0}) {
        std::vector<double> lap;
        for (double c : counts) lap.push_back(std::exp(-theta * c));
        const double est = mean_of(lap), se = stderr_of(lap);
        const double ref = limits::laplace_functional_limit(a, b, theta, rho);
        out.rows.push_back(make_row("laplace_functional",
                                    {{"rho", rho}, {"n", n}, {"x", theta}}, est, se, ref,
                                    "quadrature", std::abs(est - ref) <= 3.0 * se));
    }
    return out;
}

ExperimentOutput xp_lln(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double rho = cfg.get("rho", 1.0);
    const double n = cfg.get("n", 1e8);
    const double kappa = cfg.get("kappa", 0.5);
    const auto reps = static_cast<std::size_t>(cfg.get("replications", 50));
    const auto n_bins = static_cast<std::size_t>(std::pow(n, kappa));
    const int threads = resolve_threads(cfg.threads);
    const ppstats::Rectangle rect{0.0, 1.0, 0.0, 1.0};
    auto ratios = map_reps<double>(reps, threads, [&](std::size_t r) {
        Rng rng(RngStream{cfg.master_seed, r});
        auto splits = model::sample_splits(n_bins, rng);
        auto pv = model::bin_probabilities(splits, rho);
        const double stat = ppstats::lln_functional(pv, n, kappa, rect, 1.0);
        const double w = std::exp(-splits.martingale[n_bins - 2]);
        return stat / std::pow(w, -rho);
    });
    const double est = mean_of(ratios), se = stderr_of(ratios);
    const double ref = 1.0 / (rho * (rho + 2.0));  // (1/rho) int_rect x^{rho+1} dx dy
    out.rows.push_back(make_row("lln_functional_ratio", {{"rho", rho}, {"n", n}}, est, se,
                                ref, "closed-form", std::abs(est - ref) <= 0.1 * ref));
    return out;
}

ExperimentOutput xp_deterministic_compare(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double delta = cfg.get("delta", 2.0);
    const double alpha = cfg.get("alpha", 1.0 / boost::math::zeta(delta));
    const double n = cfg.get("n", 1e8);
    // Affine index map x = c i - s anchored at x_c = -1: theta solves
    // delta th + (1+delta) log th = log(n alpha) - log(alpha delta) - delta x_c
    //                               - delta log delta,
    // then c = e^{-th - x_c} (alpha delta)^{-1/delta}, s = delta th - x_c.
    const double xc = -1.0;
    const double rhs = std::log(n * alpha) - std::log(alpha * delta) - delta * xc -
                       delta * std::log(delta);
    double th = std::log(n) / delta;
    for (int it = 0; it < 200; ++it) th = (rhs - (1.0 + delta) * std::log(th)) / delta;
    const double c = std::exp(-th - xc) * std::pow(alpha * delta, -1.0 / delta);
    const double s = delta * th - xc;

    const double wins[][2] = {{-2.0, -1.5}, {-1.5, -1.0}, {-1.0, -0.5}, {-0.5, 0.0}};
    std::vector<double> cnts, lims;
    bool count_ok = true;
    std::ostringstream pd;
    pd << "window_lo,window_hi,expected_count,limit_integral\r\n";
    for (const auto& w : wins) {
        const auto ilo = static_cast<long long>(std::ceil((w[0] + s) / c));
        const auto ihi = static_cast<long long>(std::floor((w[1] + s) / c));
        double cnt = 0.0;
        for (long long i = ilo; i <= ihi; ++i)
            cnt += std::exp(-n * alpha * std::pow(static_cast<double>(i), -delta));
        const double lim = limits::det_limit_intensity(w[0], w[1], alpha, delta);
        cnts.push_back(cnt);
        lims.push_back(lim);
        const bool ok = std::abs(cnt / lim - 1.0) <= 0.25;
        count_ok = count_ok && ok;
        out.rows.push_back(make_row("det_window_count",
                                    {{"n", n}, {"alpha", alpha}, {"delta", delta},
                                     {"x", w[1]}},
                                    cnt, 0.0, lim, "closed-form", ok));
        pd << fmt(w[0]) << ',' << fmt(w[1]) << ',' << fmt(cnt) << ',' << fmt(lim)
           << "\r\n";
    }
    out.plotdata["det_windows.csv"] = pd.str();
    double ct = 0.0, lt = 0.0;
    for (std::size_t i = 0; i < cnts.size(); ++i) ct += cnts[i], lt += lims[i];
    double worst_profile = 0.0;
    for (std::size_t i = 0; i < cnts.size(); ++i)
        worst_profile =
            std::max(worst_profile, std::abs((cnts[i] / ct) / (lims[i] / lt) - 1.0));
    const bool a12 = count_ok && worst_profile <= 0.10;
    out.criteria.push_back({"A12", a12, worst_profile, 0.0, 0.10,
                            "window-ratio profile vs e^x intensity (counts within 25%)"});
    return out;
}

ExperimentOutput xp_rare_regimes(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double rho = cfg.get("rho", 2.0);
    const double alpha = cfg.get("alpha", 0.22);
    const double x6 = cfg.get("x", 0.3);

    // growth exponent and prefactor of the unconditioned sum
    std::vector<double> ln, ls;
    std::ostringstream pd;
    pd << "n,sum,prediction\r\n";
    rare::RegimeSpec spec{rho, alpha, 1.0, 0.0, x6};  // delta >= delta1: case 3
    auto pred = rare::regime_prediction(spec);
    for (int k = 0; k <= 8; ++k) {
        const double n = std::pow(10.0, 5.0 + 0.5 * k);
        const double kmax = x6 * std::pow(n, alpha);
        auto r = rare::expected_exp_sum(n, kmax, rho, rare::Method::quadrature);
        ln.push_back(std::log(n));
        ls.push_back(std::log(r.value));
        pd << fmt(n) << ',' << fmt(r.value) << ','
           << fmt(pred.prefactor.value * std::pow(n, pred.exponent.value)) << "\r\n";
    }
    out.plotdata["rare_growth.csv"] = pd.str();
    auto [slope, intercept] = linfit(ln, ls);
    const bool slope_ok = std::abs(slope - pred.exponent.value) <= 0.01;
    out.rows.push_back(make_row("case3_exponent", {{"rho", rho}, {"alpha", alpha}},
                                slope, 0.0, pred.exponent.value, "quadrature", slope_ok));
    // geometric-mean prefactor over the grid
    double lpre = 0.0;
    for (std::size_t i = 0; i < ln.size(); ++i)
        lpre += ls[i] - pred.exponent.value * ln[i];
    const double prefac = std::exp(lpre / static_cast<double>(ln.size()));
    const bool pref_ok = std::abs(prefac / pred.prefactor.value - 1.0) <= 0.05;
    out.rows.push_back(make_row("case3_prefactor", {{"rho", rho}, {"alpha", alpha}},
                                prefac, 0.0, pred.prefactor.value, "quadrature", pref_ok));
    out.criteria.push_back({"A6", slope_ok && pref_ok, slope, pred.exponent.value, 0.01,
                            "log-log growth of the expected empty count sum"});

    // conditioned-window ratio vs the psi profile
    const double n8 = cfg.get("n_psi", 1e8);
    const double xp8 = cfg.get("x_psi", 1.0);
    const double d1 = spec.delta1();
    const double b0 = d1 * std::log(n8);
    const double kmax8 = xp8 * std::pow(n8, alpha);
    const double den =
        rare::expected_exp_sum(n8, kmax8, rho, rare::Method::quadrature).value;
    const double num =
        rare::conditioned_exp_sum(n8, kmax8, rho, b0 + 1.0).value -
        rare::conditioned_exp_sum(n8, kmax8, rho, b0 - 1.0).value;
    const double psi = rare::psi_ratio(-1.0, 1.0, rho);
    const bool psi_ok = std::abs(num / den / psi - 1.0) <= 0.03;
    out.rows.push_back(make_row("psi_window_ratio", {{"rho", rho}, {"n", n8}}, num / den,
                                0.0, psi, "quadrature", psi_ok));
    const double add_gap = std::abs(rare::psi_ratio(-1.0, 0.0, rho) +
                                    rare::psi_ratio(0.0, 1.0, rho) -
                                    rare::psi_ratio(-1.0, 1.0, rho));
    const double mass_gap =
        std::abs(rare::psi_ratio(-kInf, 0.0, rho) + rare::psi_ratio(0.0, kInf, rho) - 1.0);
    out.rows.push_back(make_row("psi_additivity", {{"rho", rho}}, add_gap, 0.0, 0.0,
                                "quadrature", add_gap <= 1e-9));
    out.rows.push_back(make_row("psi_total_mass", {{"rho", rho}}, mass_gap, 0.0, 0.0,
                                "quadrature", mass_gap <= 1e-9));
    out.criteria.push_back({"A8", psi_ok && add_gap <= 1e-9 && mass_gap <= 1e-9,
                            num / den, psi, 0.03,
                            "conditioned/unconditioned ratio vs psi; additivity"});
    std::ostringstream pp;
    pp << "y,psi_minus_inf_to_y\r\n";
    for (double y = -2.0; y <= 2.001; y += 0.25)
        pp << fmt(y) << ',' << fmt(rare::psi_ratio(-kInf, y, rho)) << "\r\n";
    out.plotdata["psi_profile.csv"] = pp.str();

    // exact-identity validation of the limit factor sampler
    bool a10 = true;
    double worst_p = 1.0;
    const auto n_trunc = static_cast<std::size_t>(cfg.get("n_trunc", 1e6));
    std::size_t stream = 1u << 20;
    for (double r10 : {1.0, 1.5, 2.0}) {
        const auto k = static_cast<std::size_t>(std::floor(r10));
        Rng rng(RngStream{cfg.master_seed, stream++});
        ppstats::ReplicatedSamples s;
        s.master_seed = cfg.master_seed;
        for (int i = 0; i < 10000; ++i)
            s.values.push_back(model::sample_d_rho_truncated(r10, n_trunc, rng));
        auto rep = ppstats::ks_test(
            s,
            [&](double v) {
                return boost::math::gamma_p(static_cast<double>(k) + 1.0,
                                            std::pow(v, 1.0 / r10));
            },
            "d_rho_gamma_power");
        const bool ks_ok = rep.p_value > 0.01;
        out.rows.push_back(make_row("d_rho_oracle_ks", {{"rho", r10}}, rep.p_value, 0.0,
                                    0.01, "mc-oracle", ks_ok));
        // 1/D = G^{-rho} has a power-law upper tail of index (k+1)/rho <= 2,
        // so the naive sample mean has infinite variance.  Split at a small
        // threshold: the sliver below g0 is the lower incomplete gamma of the
        // sampling density (computed directly, not via the identity under
        // test) and the remainder is a finite-variance Monte Carlo average.
        const double g0 = 0.05;
        std::vector<double> inv;
        for (int i = 0; i < 200000; ++i) {
            const double g = std::pow(model::sample_d_rho(r10, rng), 1.0 / r10);
            inv.push_back(g >= g0 ? std::pow(g, -r10) : 0.0);
        }
        const double corr =
            boost::math::tgamma_lower(static_cast<double>(k) + 1.0 - r10, g0) /
            boost::math::tgamma(static_cast<double>(k) + 1.0);
        const double m = mean_of(inv) + corr, se = stderr_of(inv);
        const double ref = limits::expected_inv_d_rho(r10);
        const bool inv_ok = std::abs(m - ref) <= 4.0 * se;
        out.rows.push_back(make_row("expected_inv_d_rho", {{"rho", r10}}, m, se, ref,
                                    "closed-form", inv_ok));
        a10 = a10 && ks_ok && inv_ok;
        worst_p = std::min(worst_p, rep.p_value);
    }
    out.criteria.push_back({"A10", a10, worst_p, 0.01, 0.01,
                            "Gamma-power identity vs finite-truncation oracle"});
    return out;
}

ExperimentOutput xp_double_threshold(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double rho = cfg.get("rho", 2.0);
    const double alpha = cfg.get("alpha", 0.22);
    rare::RegimeSpec base{rho, alpha, 0.0, 0.0, 1.0};
    const double d0 = base.delta0(), d1 = base.delta1();

    // case 1: conditioned mass ratio collapses
    const double n9 = 1e9;
    const double km9 = std::floor(std::pow(n9, alpha));
    const double uncond = rare::expected_exp_sum(n9, km9, rho, rare::Method::quadrature).value;
    const double cond1 =
        rare::conditioned_exp_sum(n9, km9, rho, 0.06 * std::log(n9)).value;
    const bool c1 = cond1 / uncond < 0.01;
    out.rows.push_back(make_row("case1_ratio", {{"rho", rho}, {"n", n9}, {"delta", 0.06}},
                                cond1 / uncond, 0.0, 0.0, "quadrature", c1));

    // cases 2 and 3: slope regressions on deep analytic grids (the default
    // 1e5..1e9 grid carries n^{-0.06}..n^{-0.16} correction terms larger than
    // the +-0.01 slope tolerance, so the grids sit where the corrections are
    // below tolerance)
    auto slope_for = [&](double delta, double x, double lg_lo, double lg_hi) {
        std::vector<double> ln, ls;
        std::ostringstream pd;
        pd << "n,conditioned_sum\r\n";
        for (int k = 0; k <= 8; ++k) {
            const double n = std::pow(10.0, lg_lo + (lg_hi - lg_lo) * k / 8.0);
            const double v =
                rare::conditioned_exp_sum(n, x * std::pow(n, alpha), rho,
                                          delta * std::log(n))
                    .value;
            ln.push_back(std::log(n));
            ls.push_back(std::log(v));
            pd << fmt(n) << ',' << fmt(v) << "\r\n";
        }
        out.plotdata["regime_delta_" + fmt(delta) + ".csv"] = pd.str();
        return linfit(ln, ls).first;
    };
    rare::RegimeSpec s2{rho, alpha, 0.14, 0.0, 1.0};
    const double e2 = rare::regime_prediction(s2).exponent.value;
    const double sl2 = slope_for(0.14, 0.3, 12.0, 20.0);
    const bool c2 = std::abs(sl2 - e2) <= 0.01;
    out.rows.push_back(make_row("case2_exponent", {{"rho", rho}, {"delta", 0.14}}, sl2,
                                0.0, e2, "paper-formula", c2));
    rare::RegimeSpec s3{rho, alpha, 0.25, 0.0, 1.0};
    const double e3 = rare::regime_prediction(s3).exponent.value;
    const double sl3 = slope_for(0.25, 3.0, 13.0, 21.0);
    const bool c3 = std::abs(sl3 - e3) <= 0.01;
    out.rows.push_back(make_row("case3_cond_exponent", {{"rho", rho}, {"delta", 0.25}},
                                sl3, 0.0, e3, "paper-formula", c3));
    std::ostringstream note;
    note.precision(4);
    note << "delta0=" << d0 << " delta1=" << d1
         << "; case-2 slope " << sl2 << " vs formula " << e2
         << "; case-3 slope " << sl3 << " vs " << e3;
    out.criteria.push_back({"A7", c1 && c2 && c3, sl2, e2, 0.01, note.str()});

    // distributional collapse alongside the divergent average
    const auto reps = static_cast<std::size_t>(cfg.get("replications", 2000));
    const double n6 = cfg.get("n", 1e6);
    const auto kmax6 =
        static_cast<std::size_t>(std::floor(std::pow(n6, alpha)));
    const int threads = resolve_threads(cfg.threads);
    auto nonzero = map_reps<double>(reps, threads, [&](std::size_t r) {
        auto sc = empty_scan(cfg.master_seed, (1u << 21) + r, n6, rho,
                             std::max<std::size_t>(64, kmax6),
                             static_cast<double>(kmax6));
        return sc.count > 0.0 ? 1.0 : 0.0;
    });
    const double pfrac = mean_of(nonzero);
    out.rows.push_back(make_row("double_threshold_pr_nonzero",
                                {{"rho", rho}, {"n", n6}}, pfrac, stderr_of(nonzero),
                                0.05, "mc-oracle", pfrac < 0.05));

    // fixed-n vs poissonized bridge at rho = 1/2
    const double rb = cfg.get("bridge_rho", 0.5);
    const double nb = cfg.get("bridge_n", 1e5);
    const double xb = 1.0;
    const double phin = std::pow(nb, 1.0 / (rb + 2.0));
    const auto kb = static_cast<std::size_t>(std::floor(xb * phin));
    double quad_sum = 0.0;
    for (std::size_t i = 1; i <= kb; ++i)
        quad_sum += rare::exp_term_exact(i, nb, rb);
    const auto breps = static_cast<std::size_t>(cfg.get("bridge_replications", 4000));
    auto bvals = map_reps<double>(breps, threads, [&](std::size_t r) {
        Rng rng(RngStream{cfg.master_seed, (1u << 22) + r});
        auto splits = model::sample_splits(std::max<std::size_t>(64, kb), rng);
        auto pv = model::bin_probabilities(splits, rb);
        // exact multinomial counts over the first kb bins by binomial thinning
        auto balls = static_cast<long long>(nb);
        double mass = 1.0;
        double empties = 0.0;
        for (std::size_t i = 0; i < kb; ++i) {
            const double p = std::min(1.0, pv.probs[i] / mass);
            const long long c = rng.binomial(balls, p);
            if (c == 0) empties += 1.0;
            balls -= c;
            mass -= pv.probs[i];
        }
        return empties;
    });
    const double sim = mean_of(bvals), bse = stderr_of(bvals);
    const double bound = rare::poissonization_gap_bound(nb, phin, xb);
    const bool a11 = std::abs(sim - quad_sum) <= bound + 3.0 * bse;
    out.rows.push_back(make_row("poissonization_bridge",
                                {{"rho", rb}, {"n", nb}, {"x", xb}}, sim, bse, quad_sum,
                                "quadrature", a11));
    out.criteria.push_back({"A11", a11, sim, quad_sum, bound + 3.0 * bse,
                            "fixed-n empty count vs exact per-term quadrature"});
    return out;
}

ExperimentOutput xp_rho1_critical(const ExperimentConfig& cfg) {
    ExperimentOutput out;
    out.experiment_id = cfg.experiment_id;
    const double n = cfg.get("n", 1e10);
    const double x = cfg.get("x", 1.0);
    const double kmax = x * std::pow(n, 1.0 / 3.0);
    const double lg = std::log(n);
    const double agrid[] = {0.05, 0.10, 0.15, 0.5, 0.7, 1.0, 2.0};
    std::vector<double> aslope, vslope, plateau;
    std::ostringstream pd;
    pd << "a,scaled_sum,limit\r\n";
    for (double a : agrid) {
        const double v =
            rare::conditioned_exp_sum(n, kmax, 1.0, a * lg).value / lg;
        pd << fmt(a) << ',' << fmt(v) << ',' << fmt(rare::rho1_conditioned_limit(a, x))
           << "\r\n";
        if (a <= 0.15) {
            aslope.push_back(a);
            vslope.push_back(v);
        } else {
            plateau.push_back(v);
        }
    }
    out.plotdata["rho1_profile.csv"] = pd.str();
    const double slope = linfit(aslope, vslope).first;
    const double plat = mean_of(plateau);
    const double ratio = plat / slope;
    const bool prof_ok = std::abs(ratio - 1.0 / 3.0) <= 0.05 / 3.0;
    out.rows.push_back(make_row("rho1_plateau_over_slope", {{"rho", 1.0}, {"n", n}},
                                ratio, 0.0, 1.0 / 3.0, "quadrature", prof_ok));
    Rng rng(RngStream{cfg.master_seed, 777});
    std::vector<double> inv;
    for (int i = 0; i < 200000; ++i) inv.push_back(1.0 / model::sample_d_rho(1.0, rng));
    const double m = mean_of(inv), se = stderr_of(inv);
    const bool inv_ok = std::abs(m - 1.0) <= 4.0 * se;
    out.rows.push_back(
        make_row("expected_inv_d1", {{"rho", 1.0}}, m, se, 1.0, "closed-form", inv_ok));
    out.criteria.push_back({"A9", prof_ok && inv_ok, ratio, 1.0 / 3.0, 0.05 / 3.0,
                            "linear growth then saturation at a = 1/3"});
    return out;
}

}  // namespace

double ExperimentConfig::get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids = {
        "model-checks",  "limit-law",     "two-dim-pp",          "first-empty",
        "mixed-poisson", "lln",           "deterministic-compare", "rare-regimes",
        "double-threshold", "rho1-critical"};
    return ids;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
    ExperimentConfig cfg;
    for (auto& [key, val] : j.items()) {
        if (key == "experiment_id") {
            cfg.experiment_id = val.get<std::string>();
        } else if (key == "master_seed") {
            cfg.master_seed = val.get<std::uint64_t>();
        } else if (key == "output_dir") {
            cfg.output_dir = val.get<std::string>();
        } else if (key == "threads") {
            cfg.threads = val.get<int>();
        } else if (val.is_number()) {
            cfg.params[key] = val.get<double>();
        } else {
            throw ConfigError("config key '" + key + "' must be numeric");
        }
    }
    const auto& ids = experiment_ids();
    if (std::find(ids.begin(), ids.end(), cfg.experiment_id) == ids.end())
        throw ConfigError("unknown experiment_id: '" + cfg.experiment_id + "'");
    return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value: " + kv);
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "experiment_id") {
        cfg.experiment_id = val;
        return;
    }
    if (key == "output_dir") {
        cfg.output_dir = val;
        return;
    }
    try {
        if (key == "master_seed")
            cfg.master_seed = std::stoull(val);
        else if (key == "threads")
            cfg.threads = std::stoi(val);
        else
            cfg.params[key] = std::stod(val);
    } catch (const std::exception&) {
        throw ConfigError("invalid numeric value in --set " + kv);
    }
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("YULE_BINS_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return hardware_threads();
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    const std::string& id = cfg.experiment_id;
    if (id == "model-checks") return xp_model_checks(cfg);
    if (id == "limit-law") return xp_limit_law(cfg);
    if (id == "two-dim-pp") return xp_two_dim_pp(cfg);
    if (id == "first-empty") return xp_first_empty(cfg);
    if (id == "mixed-poisson") return xp_mixed_poisson(cfg);
    if (id == "lln") return xp_lln(cfg);
    if (id == "deterministic-compare") return xp_deterministic_compare(cfg);
    if (id == "rare-regimes") return xp_rare_regimes(cfg);
    if (id == "double-threshold") return xp_double_threshold(cfg);
    if (id == "rho1-critical") return xp_rho1_critical(cfg);
    throw ConfigError("unknown experiment_id: '" + id + "'");
}

void write_artifacts(const ExperimentOutput& out, const std::string& output_dir) {
    fs::create_directories(fs::path(output_dir) / "plotdata");
    {
        std::ofstream csv(fs::path(output_dir) / "results.csv", std::ios::binary);
        csv << "experiment_id,check";
        for (const char* c : kParamCols) csv << ',' << c;
        csv << ",estimate,stderr,reference_value,reference_source,pass\r\n";
        for (const auto& row : out.rows) {
            csv << csv_field(out.experiment_id) << ',' << csv_field(row.check);
            for (const char* c : kParamCols) {
                auto it = row.params.find(c);
                csv << ',';
                if (it != row.params.end()) csv << fmt(it->second);
            }
            csv << ',' << fmt(row.estimate) << ',' << fmt(row.stderr_) << ','
                << fmt(row.reference) << ',' << csv_field(row.reference_source) << ','
                << (row.pass ? "pass" : "fail") << "\r\n";
        }
    }
    {
        json j;
        j["experiment_id"] = out.experiment_id;
        j["truncation_flag"] = out.truncation_flag;
        j["criteria"] = json::array();
        for (const auto& c : out.criteria) {
            j["criteria"].push_back({{"id", c.id},
                                     {"pass", c.pass},
                                     {"measured", c.measured},
                                     {"reference", c.reference},
                                     {"tolerance", c.tolerance},
                                     {"note", c.note}});
        }
        std::ofstream js(fs::path(output_dir) / "summary.json");
        js << j.dump(2) << '\n';
    }
    for (const auto& [name, body] : out.plotdata) {
        std::ofstream pf(fs::path(output_dir) / "plotdata" / name, std::ios::binary);
        pf << body;
    }
}

std::string catalog() {
    struct Entry {
        const char* id;
        const char* anchor;
        const char* defaults;
    };
    static const Entry entries[] = {
        {"model-checks", "probability vector identities (Eq. Pn)",
         "rho={0.5,1,2} n_bins=1e5 vectors=100"},
        {"limit-law", "split-time CDF (Eq. eqtn) and Gumbel martingale (Eq. Minfty)",
         "replications=1e4 n_gumbel=1e5"},
        {"two-dim-pp", "two-dimensional limit point process (Thm 5, Eq. LapTrans)",
         "rho=1 n=1e6 replications=400"},
        {"first-empty", "first empty bin scaling limit (Corollary to Thm 5)",
         "rho=1 n=1e6 replications=2000"},
        {"mixed-poisson", "mixed Poisson counts and overdispersion (Thm 5, Sec. 5 mean)",
         "rho=0.5 n=1e6 x=1 replications=2000"},
        {"lln", "law-of-large-numbers functional (Prop 2)",
         "rho=1 kappa=0.5 n=1e8 replications=50"},
        {"deterministic-compare", "deterministic power-law comparison (Sec. 4 proposition)",
         "delta=2 alpha=6/pi^2 n=1e8"},
        {"rare-regimes", "expected-count growth, psi profile, limit-factor identity "
                         "(Average proposition, Corollary corolkr, Eq. DI)",
         "rho=2 alpha=0.22 x=0.3"},
        {"double-threshold", "conditioning regimes and de-poissonization (Prop kr, "
                             "Sec. 5 Lemma)",
         "rho=2 alpha=0.22 bridge_rho=0.5 bridge_n=1e5"},
        {"rho1-critical", "critical rho=1 conditioned scaling (rho=1 proposition)",
         "n=1e10 x=1"},
    };
    std::ostringstream os;
    for (const auto& e : entries)
        os << e.id << "\n  anchor: " << e.anchor << "\n  defaults: " << e.defaults
           << "\n";
    return os.str();
}

}  // namespace yule::xp
