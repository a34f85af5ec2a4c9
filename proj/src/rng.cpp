#include "scmbench/rng.hpp"

#include <cmath>

namespace scmbench {

uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t hash_tag(std::string_view tag) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngStream::RngStream(uint64_t master_seed, std::string_view tag, uint64_t i, uint64_t j) {
    uint64_t h = mix64(master_seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ hash_tag(tag));
    h = mix64(h ^ (i + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ (j + 0x632be59bd9b4e019ULL));
    // Seed xoshiro256++ state with four splitmix64 steps.
    for (auto& s : s_) {
        h += 0x9e3779b97f4a7c15ULL;
        s = mix64(h);
    }
}

long RngStream::uniform_int(long n) {
    if (n < 1) throw ParamError("uniform_int: n must be >= 1");
    const uint64_t un = static_cast<uint64_t>(n);
    uint64_t x, r;
    do {
        x = next_u64();
        r = x % un;
    } while (x - r > UINT64_MAX - (un - 1));
    return static_cast<long>(r);
}

long RngStream::uniform_range(long lo, long hi) {
    if (lo > hi) throw ParamError("uniform_range: lo > hi");
    return lo + uniform_int(hi - lo + 1);
}

double RngStream::normal(double mean, double sd) {
    if (sd <= 0) throw ParamError("normal: sd must be > 0");
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * M_PI * u2);
}

long RngStream::binomial(long n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw ParamError("binomial: invalid parameters");
    if (p == 0.0) return 0;
    if (p == 1.0) return n;
    long k = 0;
    for (long i = 0; i < n; ++i)
        if (uniform01() < p) ++k;
    return k;
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw ParamError("sample_without_replacement: need 0 <= k <= n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        long j = i + uniform_int(n - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

}  // namespace scmbench
