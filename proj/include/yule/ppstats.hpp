#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "yule/model.hpp"

namespace yule::ppstats {

struct ReplicatedSamples {
    std::vector<double> values;
    std::uint64_t master_seed = 0;
    std::string provenance;
};

struct GofReport {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    std::string law_id;

    std::string to_json() const;
};

struct EstimateWithCI {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_replications = 0;
    std::uint64_t seed = 0;
    std::string method;
};

// P(sup |F_n - F| > t) tail of the Kolmogorov law, 2 sum (-1)^{k-1} e^{-2 k^2 t^2}.
double kolmogorov_sf(double t);

GofReport ks_test(const ReplicatedSamples& samples,
                  const std::function<double(double)>& cdf,
                  const std::string& law_id = {});

struct Rectangle {
    double x_lo = 0.0, x_hi = 0.0;
    double y_lo = 0.0, y_hi = 0.0;
};

// mean of exp(-theta * #points in rect) over replications (counts pairs for
// 2-D processes, points vs [x_lo, x_hi] for 1-D).
EstimateWithCI empirical_laplace_functional(
    const std::vector<model::ScaledPointProcess>& reps, const Rectangle& rect,
    double theta);

// chi-square GOF, cells merged upward until every expected count >= 5.
GofReport count_pmf_test(const std::vector<long long>& counts,
                         const std::function<double(unsigned)>& pmf,
                         const std::string& law_id = {});

double dispersion_index(const std::vector<long long>& counts);

// n^{-((1+delta)kappa - 1)} sum_i theta 1{(i/n^kappa, n X_i / i^delta) in rect},
// delta = rho + 1, X_i = W_i^rho Z_i.
double lln_functional(const model::BinProbabilityVector& probvec, double n,
                      double kappa, const Rectangle& rect, double theta);

}  // namespace yule::ppstats
