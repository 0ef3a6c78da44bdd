#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace hf {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// A stream is identified by (key, stream); draws within a stream walk a
// 64-bit block counter. Distinct (key, stream) pairs yield structurally
// disjoint counter spaces, which is what makes parallel Monte Carlo
// reproducible independent of scheduling.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    double uniform01();     // [0, 1)
    double uniform_pos();   // (0, 1]
    double exponential(double rate);
    double normal();        // N(0,1), Box-Muller with cached spare

  private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> base_;   // [0],[1] = block counter, [2],[3] = stream
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Pure counter-based seed derivation: one Philox block keyed by the master
// seed, with (id, a, b) as the counter. Used to give every (experiment, n,
// replica) cell its own independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint32_t id,
                          std::uint32_t a, std::uint32_t b);

// FNV-1a over raw bytes; used for params/config hashes and for asserting
// that coupled solvers consume the identical noise array.
std::uint64_t fnv1a64(const void* data, std::size_t nbytes);
std::uint64_t fnv1a64(std::span<const double> values);

}  // namespace hf
