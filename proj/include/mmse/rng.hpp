#pragma once

#include <cmath>
#include <cstdint>

namespace mmse {

// splitmix64 finalizer; also used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Seed for (grid point, run) jobs. Pure hash, so extending a grid or adding
// runs never changes the seed of an existing cell.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point,
                                 std::uint64_t run) {
    std::uint64_t s = mix64(master);
    s = mix64(s ^ (0xA0761D6478BD642Full * (point + 1)));
    s = mix64(s ^ (0xE7037ED1A0B428DBull * (run + 1)));
    return s;
}

// Counter-based splitmix64 stream. Deterministic across platforms; normal
// variates via Box-Muller on the uniform output.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0, 1), safe to feed into log
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // independent substream k of this stream's seed
    Rng split(std::uint64_t k) const {
        return Rng(mix64(state_ ^ (0x8BB84B93962EACC9ull * (k + 1))));
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mmse
