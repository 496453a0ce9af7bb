// Counter-based random streams. Every Gaussian draw is addressed by
// (key, step, lane, mode): same address, same number, regardless of worker
// count or evaluation order. The generator is Philox4x32-10; normals come from
// Box-Muller on two 53-bit uniforms, so consumption per address is fixed.
#pragma once

#include <array>
#include <cstdint>

namespace swe::rng {

using u32 = std::uint32_t;
using u64 = std::uint64_t;

std::array<u32, 4> philox4x32(std::array<u32, 4> counter, std::array<u32, 2> key);

// 64-bit finalizer (murmur3 fmix64); bijective, used for stream derivation.
u64 mix64(u64 x);

// Derived stream key, e.g. per-replicate: derive(seed, replicate_index).
// Indexed derivation gives the extension property: the first M streams of a
// 2M-replicate run are exactly the streams of the M-replicate run.
u64 derive(u64 seed, u64 index);

struct NormalPair {
    double z0, z1;
};

// Two independent N(0,1) draws at the given address.
NormalPair normal_pair(u64 key, u32 step, u32 lane, u64 mode);

// One uniform in [0,1) at the given address.
double uniform(u64 key, u32 step, u32 lane, u64 mode);

// Uniform integer in [0, bound) without modulo bias beyond 2^-64 (bound is
// small in all uses: bootstrap resampling, stratified pair picks).
u64 uniform_index(u64 key, u32 step, u32 lane, u64 mode, u64 bound);

// Stream lanes. Keeping them centralized avoids accidental address collisions
// between modules drawing from the same seed.
inline constexpr u32 LANE_FIELD = 0;       // single stationary field draw
inline constexpr u32 LANE_NOISE = 1;       // noise increment, step word = j
inline constexpr u32 LANE_BOOTSTRAP = 2;   // resampling indices
inline constexpr u32 LANE_PAIR_SAMPLE = 3; // stratified pair subsampling
inline constexpr u32 LANE_RESTART = 4;     // optimizer multi-start directions
inline constexpr u32 LANE_TEST = 7;        // scratch lane for test generators

}  // namespace swe::rng
