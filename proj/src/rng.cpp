#include "hf/rng.hpp"

#include <cmath>
#include <cstring>

namespace hf {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kPhiloxM0, ctr[0], hi0, lo0);
        mul_hi_lo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    key_ = {static_cast<std::uint32_t>(seed),
            static_cast<std::uint32_t>(seed >> 32)};
    base_ = {0, 0, static_cast<std::uint32_t>(stream),
             static_cast<std::uint32_t>(stream >> 32)};
}

void Rng::refill() {
    buf_ = philox4x32(base_, key_);
    pos_ = 0;
    if (++base_[0] == 0) ++base_[1];  // 64-bit block counter
}

std::uint32_t Rng::next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return lo | (hi << 32);
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double Rng::exponential(double rate) {
    return -std::log(uniform_pos()) / rate;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double a = 2.0 * M_PI * uniform01();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint32_t id,
                          std::uint32_t a, std::uint32_t b) {
    const auto key = std::array<std::uint32_t, 2>{
        static_cast<std::uint32_t>(master),
        static_cast<std::uint32_t>(master >> 32)};
    const auto out = philox4x32({id, a, b, 0x5EEDu}, key);
    return static_cast<std::uint64_t>(out[0]) |
           (static_cast<std::uint64_t>(out[1]) << 32);
}

std::uint64_t fnv1a64(const void* data, std::size_t nbytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < nbytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(std::span<const double> values) {
    return fnv1a64(values.data(), values.size_bytes());
}

}  // namespace hf
