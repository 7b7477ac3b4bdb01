#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ewpf {

// Seeded random source. Normal deviates use an explicit Box-Muller transform
// instead of std::normal_distribution, whose algorithm is
// implementation-defined; this keeps sequences identical across standard
// libraries for a given seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal(double mean = 0.0, double stddev = 1.0);

    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n) { return engine_() % n; }

    // Derived generator for an independent stream (e.g. one benchmark cell).
    Rng fork(uint64_t stream) const;

private:
    std::mt19937_64 engine_;
};

// In-place Fisher-Yates; spelled out rather than std::shuffle so the
// permutation is reproducible across standard libraries.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_int(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace ewpf
