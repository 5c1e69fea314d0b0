#include "cstte/numcore/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cstte/error.hpp"

namespace cstte::num {

void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  os.write(buf, 8);
}

void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw DataError("truncated binary container");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

void write_container(std::ostream& os, const std::vector<NamedArray>& entries) {
  os.write(kContainerMagic, 6);
  for (const auto& [name, array] : entries) {
    write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(os, array.rank());
    for (auto e : array.shape()) write_u64(os, e);
    for (double v : array.values()) write_f64(os, v);
  }
  if (!os) throw DataError("failed writing binary container");
}

std::vector<NamedArray> read_container(std::istream& is) {
  char magic[6];
  if (!is.read(magic, 6) || std::memcmp(magic, kContainerMagic, 6) != 0) {
    throw DataError("not a CSTTE1 container (bad magic)");
  }
  std::vector<NamedArray> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = read_u64(is);
    if (len > (1U << 16)) throw DataError("implausible entry name length in container");
    std::string name(len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(len))) {
      throw DataError("truncated binary container");
    }
    const auto rank = read_u64(is);
    if (rank > 8) throw DataError("implausible rank for entry '" + name + "'");
    Shape shape(rank);
    for (auto& e : shape) e = read_u64(is);
    std::vector<double> values(element_count(shape));
    for (auto& v : values) v = read_f64(is);
    out.emplace_back(std::move(name), Array(std::move(shape), std::move(values)));
  }
  return out;
}

void save_container(const std::filesystem::path& path, const std::vector<NamedArray>& entries) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path.string() + "' for writing");
  write_container(os, entries);
}

std::vector<NamedArray> load_container(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
  return read_container(is);
}

}  // namespace cstte::num
