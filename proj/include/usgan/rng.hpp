#ifndef USGAN_RNG_HPP
#define USGAN_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace usgan {

// xoshiro256** with splitmix64 seeding. Self-contained so that streams are
// bitwise reproducible across standard libraries and easy to checkpoint
// (std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& s : state_) {
            // splitmix64
            x += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            s = z ^ (z >> 31);
        }
        have_gauss_ = false;
        gauss_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is negligible for n << 2^64 but rejection keeps it exact
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Marsaglia polar method; caches the second deviate.
    double gaussian() {
        if (have_gauss_) {
            have_gauss_ = false;
            return gauss_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        gauss_ = v * m;
        have_gauss_ = true;
        return u * m;
    }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[below(i)]);
        }
    }

    // State capture for checkpointing.
    struct State {
        std::array<std::uint64_t, 4> s;
        bool have_gauss;
        double gauss;
    };
    State state() const { return {state_, have_gauss_, gauss_}; }
    void set_state(const State& st) {
        state_ = st.s;
        have_gauss_ = st.have_gauss;
        gauss_ = st.gauss;
    }

    // Decorrelated child stream, used to derive per-epoch streams from
    // (seed, epoch) so resuming at an epoch boundary replays identically.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
    bool have_gauss_ = false;
    double gauss_ = 0.0;
};

}  // namespace usgan

#endif
