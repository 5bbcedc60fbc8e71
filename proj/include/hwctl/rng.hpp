#pragma once

#include <cmath>
#include <cstdint>

namespace hwctl {

// Counter-based splittable generator built on the splitmix64 finalizer:
// out(counter) = finalize(key + (counter+1)*GOLDEN). Streams and substreams
// derive fresh keys, so (seed, replication, step, coordinate) maps to a value
// with no sequential state. Bitwise reproducible across platforms.
struct CounterRng {
    uint64_t key = 0;

    static constexpr uint64_t GOLDEN = 0x9e3779b97f4a7c15ull;

    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    CounterRng() = default;
    CounterRng(uint64_t seed, uint64_t stream) {
        key = mix(mix(seed + GOLDEN) ^ (stream * 0xc2b2ae3d27d4eb4full + 0x165667b19e3779f9ull));
    }

    CounterRng substream(uint64_t s) const {
        CounterRng r;
        r.key = mix(key ^ (s * 0xd6e8feb86659fd93ull + GOLDEN));
        return r;
    }

    uint64_t bits(uint64_t counter) const { return mix(key + (counter + 1) * GOLDEN); }

    // uniform on (0,1), 53-bit mantissa, never exactly 0 or 1
    double uniform01(uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(uint64_t counter) const { return -std::log(uniform01(counter)); }

    // standard normal via inverse CDF (Acklam's rational approximation,
    // |rel err| < 1.2e-9) -- one uniform per normal keeps the counter map flat
    double normal(uint64_t counter) const { return norminv(uniform01(counter)); }

    static double norminv(double p) {
        static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                        -2.759285104469687e+02, 1.383577518672690e+02,
                                        -3.066479806614716e+01, 2.506628277459239e+00};
        static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                        -1.556989798598866e+02, 6.680131188771972e+01,
                                        -1.328068155288572e+01};
        static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                        -2.400758277161838e+00, -2.549732539343734e+00,
                                        4.374664141464968e+00,  2.938163982698783e+00};
        static constexpr double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                         2.445134137142996e+00, 3.754408661907416e+00};
        const double plow = 0.02425, phigh = 1.0 - plow;
        if (p < plow) {
            double q = std::sqrt(-2.0 * std::log(p));
            return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
        }
        if (p > phigh) {
            double q = std::sqrt(-2.0 * std::log(1.0 - p));
            return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
        }
        double q = p - 0.5, r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
};

// Sequential view over a counter stream, for call sites that consume a
// variable number of draws.
struct RngStream {
    CounterRng g;
    uint64_t ctr = 0;
    RngStream() = default;
    explicit RngStream(CounterRng gen) : g(gen) {}
    double u() { return g.uniform01(ctr++); }
    double expo() { return g.exponential(ctr++); }
    double normal() { return g.normal(ctr++); }
};

}  // namespace hwctl
