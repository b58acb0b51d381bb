#pragma once

// Seedable RNG used throughout. The generator is std::mt19937_64 (whose output
// sequence is fixed by the standard) and normals come from the Marsaglia polar
// transform, so a (seed, draw-order) pair pins every path. Substreams for
// parallel work are derived with splitmix64 so that (seed, index) is portable.

#include <cstdint>
#include <random>

namespace chiarella {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform on (0, 1)
    double uniform() {
        // 53-bit mantissa; never returns 0 or 1
        return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // standard normal via Marsaglia polar method
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo with rejection to avoid bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        return Rng(detail::splitmix64(detail::splitmix64(seed) ^ index));
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace chiarella
