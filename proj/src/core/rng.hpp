#pragma once

#include <cstdint>
#include <cmath>
#include <string>
#include <string_view>

namespace dvface {

// Counter-based generator: every draw is a pure function of (key, counter).
// Keys are built by hashing a seed with an arbitrary list of stream tags, so
// independent streams never share state and results are identical across
// platforms.
class CounterRng {
public:
    explicit CounterRng(uint64_t key) : key_(key), counter_(0) {}

    static uint64_t hash_key(uint64_t seed) { return mix(seed ^ 0x9e3779b97f4a7c15ULL); }

    static uint64_t combine(uint64_t key, uint64_t tag) {
        return mix(key ^ mix(tag + 0x9e3779b97f4a7c15ULL));
    }

    static uint64_t combine(uint64_t key, std::string_view tag) {
        // FNV-1a over the tag bytes, then mixed into the key.
        uint64_t h = 1469598103934665603ULL;
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        return combine(key, h);
    }

    uint64_t next_u64() { return mix(key_ ^ mix(counter_++ + 0x632be59bd9b4e019ULL)); }

    // Uniform in [0, 1).
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    // Inclusive integer range.
    int64_t next_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }

    // Box-Muller; one value per call, the pair partner is discarded to keep
    // the counter mapping simple.
    double next_gaussian() {
        double u1 = next_uniform();
        double u2 = next_uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    uint64_t counter() const { return counter_; }
    void set_counter(uint64_t c) { counter_ = c; }
    uint64_t key() const { return key_; }

private:
    // splitmix64 finalizer
    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t key_;
    uint64_t counter_;
};

// Convenience: a stream keyed on (seed, tag, index).
inline CounterRng make_stream(uint64_t seed, std::string_view tag, uint64_t index = 0) {
    uint64_t k = CounterRng::hash_key(seed);
    k = CounterRng::combine(k, tag);
    k = CounterRng::combine(k, index);
    return CounterRng(k);
}

}  // namespace dvface
