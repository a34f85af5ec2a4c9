#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "scmbench/common.hpp"

namespace scmbench {

// Splitmix64 finalizer; used to derive stream seeds from (master, tag, indices).
uint64_t mix64(uint64_t z);

// FNV-1a over a purpose tag, so streams with different roles never collide.
uint64_t hash_tag(std::string_view tag);

// Deterministic random stream (xoshiro256++) with portable distributions.
//
// Child streams derive as RngStream(master, tag, i, j): the derivation is a
// pure function of its arguments, so per-SCM / per-query streams can be
// created in any order (worker threads included) and always produce the same
// sequences. All distributions are implemented here rather than via
// <random>, whose distributions are implementation-defined.
class RngStream {
public:
    RngStream(uint64_t master_seed, std::string_view tag, uint64_t i = 0, uint64_t j = 0);

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw ParamError("uniform: empty interval");
        return lo + (hi - lo) * uniform01();
    }

    // Uniform over {0, ..., n-1}, unbiased. n >= 1.
    long uniform_int(long n);

    // Uniform over {lo, ..., hi} inclusive.
    long uniform_range(long lo, long hi);

    // Box-Muller.
    double normal(double mean, double sd);

    // Exact Binomial(n, p) as a sum of Bernoulli draws.
    long binomial(long n, double p);

    // k distinct values from {0, ..., n-1}; order is the draw order.
    std::vector<int> sample_without_replacement(int n, int k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(static_cast<long>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
};

}  // namespace scmbench
