#include "ewpf/rng.hpp"

#include <cmath>
#include <numbers>

namespace ewpf {

double Rng::normal(double mean, double stddev) {
    // Box-Muller, one deviate per call (the spare is discarded so the
    // consumption pattern stays simple and auditable).
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(uint64_t stream) const {
    // splitmix64 over (engine seed material, stream) to decorrelate streams
    uint64_t x = stream + 0x9E3779B97F4A7C15ull;
    auto mix = [](uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    };
    Rng copy = *this;
    return Rng(mix(copy.next_u64() ^ mix(x)));
}

}  // namespace ewpf
