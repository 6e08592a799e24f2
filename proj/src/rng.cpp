#include "replaysim/rng.hpp"

#include <cmath>
#include <numbers>

namespace replaysim {

namespace {

// splitmix64 finalizer; standard 64-bit mixer with full avalanche.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t key, std::uint64_t tag) {
    return mix64(mix64(key ^ 0xa0761d6478bd642fULL) + tag);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix64(seed)), gen_(key_) {}

Rng::Rng(std::uint64_t key, int) : key_(key), gen_(key) {}

Rng Rng::split(std::uint64_t tag) const {
    return Rng(combine(key_, tag), 0);
}

Rng Rng::split(std::string_view label) const {
    // FNV-1a over the label, then combined with the parent key.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return Rng(combine(key_, h), 0);
}

std::uint64_t Rng::next_u64() {
    return gen_();
}

double Rng::uniform() {
    // Top 53 bits, shifted into (0, 1]: u = (x >> 11 + 1) * 2^-53.
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace replaysim
