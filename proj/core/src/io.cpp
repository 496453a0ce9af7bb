#include "swe/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace swe::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) *out_ << ',';
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\r\n") != std::string::npos) {
            *out_ << '"';
            for (char ch : c) {
                if (ch == '"') *out_ << '"';
                *out_ << ch;
            }
            *out_ << '"';
        } else {
            *out_ << c;
        }
    }
    *out_ << "\r\n";
}

namespace {

constexpr char kMagic[4] = {'S', 'W', 'E', '3'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void write_field(const std::filesystem::path& path, const Field& field) {
    if (!field.all_finite())
        throw std::invalid_argument("write_field: refusing to dump a non-finite field");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_field: cannot open " + path.string());
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(field.grid.n));
    put(out, field.grid.L);
    out.write(reinterpret_cast<const char*>(field.v.data()),
              static_cast<std::streamsize>(field.v.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write_field: short write to " + path.string());
}

Field read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_field: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_field: bad magic in " + path.string());
    std::uint32_t version = 0, n = 0;
    double L = 0.0;
    get(in, version);
    if (version != kVersion)
        throw std::runtime_error("read_field: unsupported version in " + path.string());
    get(in, n);
    get(in, L);
    Grid g(L, static_cast<int>(n));
    Field f(g);
    in.read(reinterpret_cast<char*>(f.v.data()),
            static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_field: truncated payload in " + path.string());
    return f;
}

std::filesystem::path write_trajectory(const std::filesystem::path& dir,
                                       const std::string& stem, const Trajectory& traj,
                                       const std::string& config_hash) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["config_hash"] = config_hash;
    manifest["n"] = traj.grid.n;
    manifest["L"] = traj.grid.L;
    manifest["dt"] = traj.dt;
    manifest["levels"] = traj.position.size();
    std::vector<std::string> files;
    char name[64];
    for (std::size_t j = 0; j < traj.position.size(); ++j) {
        std::snprintf(name, sizeof(name), "%s_%04zu.swe3", stem.c_str(), j);
        write_field(dir / name, traj.position[j]);
        files.emplace_back(name);
    }
    manifest["files"] = files;
    std::filesystem::path mpath = dir / (stem + "_manifest.json");
    std::ofstream out(mpath, std::ios::trunc);
    if (!out) throw std::runtime_error("write_trajectory: cannot open " + mpath.string());
    out << manifest.dump(2) << '\n';
    return mpath;
}

}  // namespace swe::io
