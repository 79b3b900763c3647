#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace feinfn {

/// Seeded deterministic random source. All stochastic behavior in the library
/// flows through one of these; distributions are hand-rolled so a given seed
/// produces the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal();

    /// Uniform integer in [0, n). n must be positive.
    std::int64_t uniform_int(std::int64_t n);

    std::string state() const;
    void set_state(const std::string& s);

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace feinfn
