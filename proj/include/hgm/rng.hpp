#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "hgm/errors.hpp"

namespace hgm::num {

// xorshift64* generator (Marsaglia xorshift with the Vigna output multiplier
// 0x2545F4914F6CDD1D and shift triple 12/25/27). Chosen because the whole
// algorithm fits in four lines and produces the same stream on every
// platform, which the determinism tests rely on.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : kZeroSeedFill) {}

    std::uint64_t next_u64() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0, 1), 53 mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) throw ValidationError("sample_without_replacement: k exceeds n");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    // The all-zero state is a fixed point of xorshift; remap it.
    static constexpr std::uint64_t kZeroSeedFill = 0x9E3779B97F4A7C15ULL;
    std::uint64_t state_;
};

}  // namespace hgm::num
