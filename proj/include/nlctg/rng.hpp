#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlctg/errors.hpp"

namespace nlctg {

// Portable seedable generator (splitmix64 core). All sampling in the toolkit
// goes through this class so datasets are reproducible across platforms;
// generator_id() is recorded in output metadata.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static const char* generator_id() { return "splitmix64"; }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform index in [0, n).
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw Error("uniform_index: empty range");
        std::uint64_t bound = n;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    // Index sampled proportionally to the (positive) weights.
    std::size_t weighted_index(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw Error("weighted_index: non-positive total weight");
        double r = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (r < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent sub-stream for element `index` of a batch keyed by `seed`.
    // Mixing both through the splitmix64 finalizer decorrelates neighbours.
    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        Rng mixer(seed ^ (0x632be59bd9b4e019ULL * (index + 1)));
        return Rng(mixer.next_u64());
    }

  private:
    std::uint64_t state_;
};

}  // namespace nlctg
