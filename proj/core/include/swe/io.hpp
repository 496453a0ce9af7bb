#pragma once

// Artifact serialization: canonical number formatting, FNV-1a hashing for
// config fingerprints, RFC-4180 CSV emission, and the SWE3 binary field dump.

#include "swe/grid.hpp"
#include "swe/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace swe::io {

// Fixed 17-significant-digit formatting; every floating-point number that
// reaches an artifact goes through this one function so outputs are stable.
std::string format_double(double v);

// 64-bit FNV-1a over the bytes of the view.
std::uint64_t fnv1a(std::string_view bytes);

// Lowercase 16-hex-digit rendering (zero padded).
std::string hex16(std::uint64_t v);

// RFC-4180 writer: CRLF row endings, quoting only where required, doubled
// embedded quotes. Numeric cells should be pre-rendered via format_double.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(&out) {}

    void row(const std::vector<std::string>& cells);

private:
    std::ostream* out_;
};

// Binary field snapshot. Layout: magic "SWE3", u32 version (currently 1),
// u32 N, f64 L, then N^3 doubles in x-fastest order. Byte order is the
// host's (little-endian everywhere this project runs).
void write_field(const std::filesystem::path& path, const Field& field);
Field read_field(const std::filesystem::path& path);

// One SWE3 file per stored snapshot ("<stem>_<level>.swe3", zero-padded)
// plus "<stem>_manifest.json" recording the grid, the time step, the file
// list, and the caller's config hash. Returns the manifest path.
std::filesystem::path write_trajectory(const std::filesystem::path& dir,
                                       const std::string& stem, const Trajectory& traj,
                                       const std::string& config_hash);

}  // namespace swe::io
