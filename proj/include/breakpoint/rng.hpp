#ifndef BREAKPOINT_RNG_HPP
#define BREAKPOINT_RNG_HPP

#include <cmath>
#include <cstdint>

// Self-contained RNG stack. The standard library's distributions are
// implementation-defined, so reproducibility contracts (byte-identical
// reports for a given seed) require owning the whole chain: SplitMix64 for
// seeding and stream derivation, xoshiro256++ as the generator, Box-Muller
// for normals.

namespace bp {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent substream seed (replicate r of a Monte Carlo run,
// path p of a simulation). Feeding the pair through SplitMix64 twice keeps
// neighbouring ids far apart in the generator's state space.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream_id * 0xD1B54A32D192ED03ULL + 0x8BB84B93962EACC9ULL);
    return splitmix64(s);
}

class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1) with the full 53-bit mantissa.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// Standard normal draws via Box-Muller, producing pairs and caching the spare.
class NormalGen {
  public:
    explicit NormalGen(std::uint64_t seed) : gen_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1]: shift away from 0 so log() is finite.
        double u1 = 1.0 - gen_.uniform();
        double u2 = gen_.uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double uniform() { return gen_.uniform(); }
    std::uint64_t bits() { return gen_.next(); }

    // Rademacher +-1 with equal probability.
    double sign() { return (gen_.next() >> 63) ? 1.0 : -1.0; }

  private:
    Xoshiro256pp gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bp

#endif
