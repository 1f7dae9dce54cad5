#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace yule {

// Reproducible stream handle: (master_seed, stream_index) fully determines the
// draw sequence, independent of which thread consumes it.
struct RngStream {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

// Engine owned by exactly one replication; never shared across threads.
class Rng {
  public:
    explicit Rng(RngStream stream) {
        std::uint64_t s = stream.master_seed;
        std::uint64_t a = detail::splitmix64(s);
        s ^= 0xd1b54a32d192ed03ULL * (stream.stream_index + 1);
        std::uint64_t b = detail::splitmix64(s);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        engine_.seed(seq);
    }

    // Uniform on (0,1]; never returns 0, safe under log().
    double uniform() {
        const double u = (engine_() >> 11) * 0x1.0p-53;
        return 1.0 - u;
    }

    double exponential() { return -std::log(uniform()); }
    double exponential(double rate) { return exponential() / rate; }

    long long poisson(double mean) {
        std::poisson_distribution<long long> dist(mean);
        return dist(engine_);
    }

    long long binomial(long long trials, double p) {
        if (trials <= 0 || p <= 0.0) return 0;
        std::binomial_distribution<long long> dist(trials, std::min(p, 1.0));
        return dist(engine_);
    }

    double gamma(double shape) {
        std::gamma_distribution<double> dist(shape, 1.0);
        return dist(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace yule
