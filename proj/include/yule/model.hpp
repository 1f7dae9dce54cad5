#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "yule/rng.hpp"

namespace yule::model {

// Split times t_i = sum_{j<=i} E_j/j of a Yule process, with the centered
// martingale M_i = t_i - log i.
struct SplitSequence {
    std::size_t n_bins = 0;
    std::vector<double> increments;  // E_i, unit-rate exponential, 1-based logically
    std::vector<double> times;       // t_i, strictly increasing
    std::vector<double> martingale;  // M_i = t_i - log i
};

enum class ProbSource { yule, deterministic_power_law };

// Bin landing probabilities P_i together with the W/Z decomposition
// P_i = W_i^rho Z_i / i^{rho+1} (Yule source only).
struct BinProbabilityVector {
    double rho = 0.0;
    std::vector<double> probs;
    double tail_mass = 0.0;
    std::vector<double> w_values;  // W_i = e^{-(t_{i-1} - log i)}, W_1 = 1
    std::vector<double> z_values;  // Z_i = i (1 - e^{-rho E_i / i})
    ProbSource source_tag = ProbSource::yule;
};

enum class ThrowMode { exact, poissonized };

struct OccupancyCounts {
    std::vector<long long> counts;
    long long tail_count = 0;
    long long n_balls_requested = 0;  // n, or the Poisson mean in poissonized mode
    ThrowMode mode = ThrowMode::exact;
    long long realized_total = 0;
};

// Affine rescaling of bin indices: point(i) = i / phi(n) - shift with
// phi(n) = factor * n^exponent * (log n)^{-log_power}.
struct ScaleDescriptor {
    double n = 1.0;
    double exponent = 1.0;
    double log_power = 0.0;
    double shift = 0.0;
    double factor = 1.0;

    double phi() const;
};

struct ScaledPointProcess {
    int dimension = 1;
    std::vector<double> points;                     // 1-D, sorted ascending
    std::vector<std::pair<double, double>> pairs;   // 2-D
    ScaleDescriptor scale;
};

// Raised by first_empty_index when every bin up to the truncation holds a
// ball; the caller must enlarge n_bins.
class TruncationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

SplitSequence sample_splits(std::size_t n_bins, Rng& rng);
void sample_splits_into(std::size_t n_bins, Rng& rng, SplitSequence& out);

BinProbabilityVector bin_probabilities(const SplitSequence& splits, double rho);

// Q_i proportional to alpha_coeff / i^delta, normalized over the full
// infinite vector; tail_mass is the analytic mass beyond n_bins.
BinProbabilityVector deterministic_power_law(double alpha_coeff, double delta,
                                             std::size_t n_bins);

OccupancyCounts throw_balls(const BinProbabilityVector& probvec, long long n_balls,
                            ThrowMode mode, Rng& rng);

ScaledPointProcess empty_bin_process(const OccupancyCounts& occ, long long level,
                                     const ScaleDescriptor& scale);

// 1-based index of the first empty bin; throws TruncationError if none.
std::size_t first_empty_index(const OccupancyCounts& occ);

// Pairs (i / n^{1/(rho+2)}, n P_i).
ScaledPointProcess two_dim_process(const BinProbabilityVector& probvec, double n);

// Exact inverse-CDF sample of t_k conditioned on t_k in (lo, hi);
// F(x) = (1 - e^{-x})^k. Pass infinity for an unbounded window.
double sample_t_k_conditional(std::size_t k, double lo, double hi, Rng& rng);

// D_rho = Gamma(floor(rho)+1, 1)^rho; the limit factor of the rare-event
// decomposition P_i = e^{-rho t_k} D_rho E / i^{rho+1}.
double sample_d_rho(double rho, Rng& rng);

// Finite-N sample of exp(-rho [M_N - M_k - log k]), k = floor(rho).
// Exact: t_N - t_k is the (N-k)th split time of a Yule process started from
// k+1 individuals, sampled through the negative-binomial population identity
// P(t_N - t_k <= x) = I_{1-e^{-x}}(N-k, k+1).
double sample_d_rho_truncated(double rho, std::size_t n_trunc, Rng& rng);

// Same law, by summing the N-k exponential increments; cross-validation only.
double sample_d_rho_truncated_brute(double rho, std::size_t n_trunc, Rng& rng);

// Columnar CSV (header: index,increment,time,martingale / index,count).
void write_csv(const SplitSequence& splits, std::ostream& os);
void write_csv(const OccupancyCounts& occ, std::ostream& os);

}  // namespace yule::model
