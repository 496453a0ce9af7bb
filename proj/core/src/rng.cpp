#include "swe/rng.hpp"

#include <cmath>

namespace swe::rng {

namespace {

constexpr u32 M0 = 0xD2511F53u;
constexpr u32 M1 = 0xCD9E8D57u;
constexpr u32 W0 = 0x9E3779B9u;  // golden ratio
constexpr u32 W1 = 0xBB67AE85u;  // sqrt(3) - 1

inline std::array<u32, 4> round_once(const std::array<u32, 4>& c, const std::array<u32, 2>& k) {
    const u64 p0 = static_cast<u64>(M0) * c[0];
    const u64 p1 = static_cast<u64>(M1) * c[2];
    const u32 hi0 = static_cast<u32>(p0 >> 32), lo0 = static_cast<u32>(p0);
    const u32 hi1 = static_cast<u32>(p1 >> 32), lo1 = static_cast<u32>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline u64 to_u64(u32 hi, u32 lo) { return (static_cast<u64>(hi) << 32) | lo; }

// 53-bit mantissa uniform in [0,1)
inline double u01(u64 x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }
// uniform in (0,1], safe as a log argument
inline double u01_open0(u64 x) { return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace

std::array<u32, 4> philox4x32(std::array<u32, 4> counter, std::array<u32, 2> key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += W0;
            key[1] += W1;
        }
        counter = round_once(counter, key);
    }
    return counter;
}

u64 mix64(u64 x) {
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDull;
    x ^= x >> 33;
    x *= 0xC4CEB9FE1A85EC53ull;
    x ^= x >> 33;
    return x;
}

u64 derive(u64 seed, u64 index) {
    return mix64(seed ^ mix64(index + 0x9E3779B97F4A7C15ull));
}

static std::array<u32, 4> block(u64 key, u32 step, u32 lane, u64 mode) {
    const std::array<u32, 4> counter = {static_cast<u32>(mode), static_cast<u32>(mode >> 32),
                                        step, lane};
    const std::array<u32, 2> k = {static_cast<u32>(key), static_cast<u32>(key >> 32)};
    return philox4x32(counter, k);
}

NormalPair normal_pair(u64 key, u32 step, u32 lane, u64 mode) {
    const auto r = block(key, step, lane, mode);
    const double u1 = u01_open0(to_u64(r[0], r[1]));
    const double u2 = u01(to_u64(r[2], r[3]));
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * 3.14159265358979323846 * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

double uniform(u64 key, u32 step, u32 lane, u64 mode) {
    const auto r = block(key, step, lane, mode);
    return u01(to_u64(r[0], r[1]));
}

u64 uniform_index(u64 key, u32 step, u32 lane, u64 mode, u64 bound) {
    const auto r = block(key, step, lane, mode);
    // 128-bit multiply-shift keeps the bias below 2^-64 for any bound
    const u64 x = to_u64(r[0], r[1]);
    return static_cast<u64>((static_cast<unsigned __int128>(x) * bound) >> 64);
}

}  // namespace swe::rng
