#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "aifnav/diffcore/tensor.hpp"

namespace aifnav {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

// Named-stream random generator. Child streams are derived from the parent
// seed and a name, so sibling consumers always see distinct, reproducible
// streams.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    uint64_t seed() const { return seed_; }

    Rng child(std::string_view name) const { return Rng(splitmix64(seed_ ^ fnv1a(name))); }
    Rng child(std::string_view name, uint64_t index) const {
        return Rng(splitmix64(seed_ ^ fnv1a(name) ^ splitmix64(index)));
    }

    float uniform(float lo = 0.0f, float hi = 1.0f) {
        std::uniform_real_distribution<float> d(lo, hi);
        return d(gen_);
    }

    float normal(float mean = 0.0f, float stddev = 1.0f) {
        std::normal_distribution<float> d(mean, stddev);
        return d(gen_);
    }

    // Uniform integer in [0, n).
    int randint(int n) {
        std::uniform_int_distribution<int> d(0, n - 1);
        return d(gen_);
    }

    void fill_normal(Tensor& t, float stddev = 1.0f) {
        std::normal_distribution<float> d(0.0f, stddev);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = d(gen_);
    }

    void fill_uniform(Tensor& t, float lo, float hi) {
        std::uniform_real_distribution<float> d(lo, hi);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = d(gen_);
    }

    Tensor normal_tensor(std::vector<int> shape, float stddev = 1.0f) {
        Tensor t(std::move(shape));
        fill_normal(t, stddev);
        return t;
    }

    std::mt19937_64& engine() { return gen_; }

private:
    uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace aifnav
