#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "kpo/core/error.hpp"
#include "kpo/qphase/husimi.hpp"

namespace kpo::qphase {

// Binary grid layout (little-endian):
//   char[8]  magic "KPOGRID1"
//   uint64   nq, np
//   float64  q_min, q_max, p_min, p_max, hbar_eff
//   float64  values[np][nq]   (q fastest)
inline constexpr char kGridMagic[8] = {'K', 'P', 'O', 'G', 'R', 'I', 'D', '1'};

static_assert(std::endian::native == std::endian::little, "binary grid I/O assumes a little-endian host");

inline void write_grid_binary(const GridField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    const std::uint64_t nq = f.grid.nq, np = f.grid.np;
    const double header[5] = {f.grid.q_min, f.grid.q_max, f.grid.p_min, f.grid.p_max, f.hbar_eff};
    out.write(kGridMagic, 8);
    out.write(reinterpret_cast<const char*>(&nq), 8);
    out.write(reinterpret_cast<const char*>(&np), 8);
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    out.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * 8));
    if (!out) throw FormatError("write failed: " + path);
}

inline GridField read_grid_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kGridMagic, 7) != 0) throw FormatError(path + ": not a binary grid file");
    if (magic[7] != kGridMagic[7]) throw VersionError(path + ": unsupported grid format version '" + magic[7] + "'");
    std::uint64_t nq = 0, np = 0;
    double header[5];
    in.read(reinterpret_cast<char*>(&nq), 8);
    in.read(reinterpret_cast<char*>(&np), 8);
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (!in) throw FormatError(path + ": truncated header");
    if (nq < 2 || np < 2 || nq > (1u << 20) || np > (1u << 20)) throw FormatError(path + ": implausible grid dimensions");
    GridField f;
    f.grid = {header[0], header[1], header[2], header[3], static_cast<int>(nq), static_cast<int>(np)};
    f.hbar_eff = header[4];
    f.values.resize(nq * np);
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * 8));
    if (!in) throw FormatError(path + ": truncated data");
    in.peek();
    if (!in.eof()) throw FormatError(path + ": trailing bytes after grid data");
    f.grid.validate();
    return f;
}

/// CSV with header q,p,value; rows in storage order.
inline void write_grid_csv(const GridField& f, const std::string& path, const std::string& value_name = "value") {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw FormatError("cannot open " + path + " for writing");
    std::fprintf(fp, "q,p,%s\n", value_name.c_str());
    for (int j = 0; j < f.grid.np; ++j)
        for (int i = 0; i < f.grid.nq; ++i) std::fprintf(fp, "%.17g,%.17g,%.17g\n", f.grid.q(i), f.grid.p(j), f.at(i, j));
    std::fclose(fp);
}

}  // namespace kpo::qphase
