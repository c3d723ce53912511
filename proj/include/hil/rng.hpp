#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hil {

/// Seeded generator with distribution helpers whose output depends only on
/// the engine bits. The standard distributions are implementation-defined,
/// which would tie a run manifest to one standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is discarded so the
    /// stream position is independent of call history.
    double normal(double mean = 0.0, double sigma = 1.0)
    {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace hil
