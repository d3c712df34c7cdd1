#include "phasebound/rng.hpp"

#include <bit>
#include <cmath>

namespace phasebound {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 output function
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t Rng::value_at(std::uint64_t key, std::uint64_t i) {
    return mix64(key + kGolden * (i + 1));
}

std::uint64_t Rng::derive(std::uint64_t key, std::uint64_t tag) {
    return mix64(mix64(key ^ 0xD1B54A32D192ED03ull) ^ mix64(tag + kGolden));
}

std::uint64_t Rng::derive(std::uint64_t key, std::string_view tag) {
    // FNV-1a 64-bit
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x00000100000001B3ull;
    }
    return derive(key, h);
}

std::uint64_t Rng::tag_of(double x) {
    if (x == 0.0) x = 0.0; // collapse -0.0
    return std::bit_cast<std::uint64_t>(x);
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_oc();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

} // namespace phasebound
