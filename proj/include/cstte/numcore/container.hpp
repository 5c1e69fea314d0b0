#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cstte/numcore/array.hpp"

namespace cstte::num {

/// Versioned binary container of named arrays. Layout: the 6 magic bytes
/// "CSTTE1", then per entry: u64 name length, UTF-8 name bytes, u64 rank,
/// rank × u64 extents, then the row-major values as f64. All integers and
/// floats are little-endian. Entries run to end of file.
inline constexpr char kContainerMagic[] = "CSTTE1";

using NamedArray = std::pair<std::string, Array>;

void write_container(std::ostream& os, const std::vector<NamedArray>& entries);
std::vector<NamedArray> read_container(std::istream& is);

void save_container(const std::filesystem::path& path, const std::vector<NamedArray>& entries);
std::vector<NamedArray> load_container(const std::filesystem::path& path);

// Little-endian primitives, shared with other binary exports.
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);

}  // namespace cstte::num
