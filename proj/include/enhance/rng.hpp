#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace enhance {

// Seeded RNG wrapper. All stochastic behavior in the library flows through
// one of these, so a seed fully determines a run.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    // Uniform integer in [0, n).
    uint64_t next_index(uint64_t n) {
        return std::uniform_int_distribution<uint64_t>(0, n - 1)(engine_);
    }
    bool coin() { return next_index(2) == 1; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng.next_index(i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace enhance
