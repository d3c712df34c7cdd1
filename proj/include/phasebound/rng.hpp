#pragma once

#include <cstdint>
#include <string_view>

namespace phasebound {

/**
 * @brief Counter-based pseudo-random generator with reproducible substreams.
 *
 * The generator is the splitmix64 sequence evaluated at an arbitrary
 * counter offset, so any draw is addressable as a pure function of
 * (key, counter). Gaussian variates use Box-Muller on two explicit
 * uniforms. This keeps every simulation bit-reproducible across
 * platforms and across any parallel execution order.
 */
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return value_at(key_, counter_++); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform_oc() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal();

    std::uint64_t key() const { return key_; }

    /// i-th raw output of the stream with the given key.
    static std::uint64_t value_at(std::uint64_t key, std::uint64_t i);

    /// Derive an independent child key from a key and a 64-bit tag.
    static std::uint64_t derive(std::uint64_t key, std::uint64_t tag);

    /// Derive a child key from a string tag (FNV-1a hash of the bytes).
    static std::uint64_t derive(std::uint64_t key, std::string_view tag);

    /// Tag encoding for doubles (bit pattern; -0.0 normalized to 0.0).
    static std::uint64_t tag_of(double x);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace phasebound
