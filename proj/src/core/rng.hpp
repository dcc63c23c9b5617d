#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace mknock {

/**
 * Counter-based 64-bit stream (SplitMix64 output function over a keyed counter).
 *
 * Output i of a stream with key k is mix(k + (i + 1) * 0x9E3779B97F4A7C15), so a
 * stream is fully described by (key, counter) and can be regenerated from any
 * point. Independent sub-streams are derived by hashing a tag into the key:
 *
 *     Stream root(seed);
 *     Stream rep  = root.derive(replicate_index);
 *     Stream feat = rep.derive(Role::Features);
 *
 * Derivation never touches the parent's counter, so the order in which
 * sub-streams are derived or consumed does not change any of them.
 */
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6A09E667F3BCC909ULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        ++counter_;
        return mix(key_ + counter_ * kGolden);
    }

    Stream derive(std::uint64_t tag) const;
    Stream derive(std::string_view tag) const;

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    static std::uint64_t mix(std::uint64_t z);

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
    struct FromKey {};
    Stream(FromKey, std::uint64_t key) : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Sub-stream roles used throughout the pipeline.
enum class Role : std::uint64_t {
    Features = 0x1001,
    Errors = 0x1002,
    Mask = 0x1003,
    Outcome = 0x1004,
    Beta = 0x1005,
    Impute = 0x2001,
    Knockoff = 0x3001,
    Statistic = 0x4001,
    Interleave = 0x4002,
    Folds = 0x4003,
    Forest = 0x4004,
    Stability = 0x5001,
};

inline Stream derive(const Stream& s, Role role) {
    return s.derive(static_cast<std::uint64_t>(role));
}

}  // namespace mknock
