#pragma once

// Seeded random utilities. All samplers are hand-rolled on top of
// mt19937_64 so that streams are identical across standard library
// implementations; std::*_distribution is not used anywhere.

#include <cmath>
#include <cstdint>
#include <random>

namespace admissions {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream seed for a sub-task (per application set, per year, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base + 0x632be59bd9b4e019ULL * (index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1], safe for log().
    double uniform01_open() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Inclusive bounds.
    int uniform_int(int lo, int hi) {
        auto span = static_cast<std::uint64_t>(hi - lo + 1);
        auto scaled = static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(eng_()) * span) >> 64);
        return lo + static_cast<int>(scaled);
    }

    // Box-Muller; no state is cached between calls.
    double normal(double mean = 0.0, double sd = 1.0) {
        double u1 = uniform01_open();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double gumbel() {
        return -std::log(-std::log(uniform01_open()));
    }

private:
    std::mt19937_64 eng_;
};

} // namespace admissions
