#include "gvf/table_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gvf {

namespace {

constexpr char kMagic[4] = {'P', 'H', 'I', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("table load: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_table_csv(const TriangularKernelTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("table save: cannot open " + path);
  out.precision(17);
  out << "j,i,l,k,value\n";
  for (int j = 0; j < table.channels(); ++j) {
    for (std::size_t i = 0; i <= static_cast<std::size_t>(table.steps()); ++i) {
      for (std::size_t l = 0; l <= i; ++l) {
        const double* f = table.field(j, i, l);
        for (int k = 0; k < table.n_modes(); ++k) {
          out << j << ',' << i << ',' << l << ',' << k << ',' << f[k] << '\n';
        }
      }
    }
  }
  if (!out) throw std::runtime_error("table save: write failure on " + path);
}

void save_table_binary(const TriangularKernelTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("table save: cannot open " + path);
  out.write(kMagic, 4);
  write_u32_le(out, kVersion);
  write_u32_le(out, static_cast<std::uint32_t>(table.channels()));
  write_u32_le(out, static_cast<std::uint32_t>(table.steps()));
  write_u32_le(out, static_cast<std::uint32_t>(table.n_modes()));
  for (int j = 0; j < table.channels(); ++j) {
    const std::vector<double>& data = table.channel_data(j);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("table save: write failure on " + path);
}

TriangularKernelTable load_table_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("table load: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("table load: bad magic in " + path);
  }
  const std::uint32_t version = read_u32_le(in);
  if (version != kVersion) {
    throw std::runtime_error("table load: unsupported version " + std::to_string(version));
  }
  const std::uint32_t channels = read_u32_le(in);
  const std::uint32_t steps = read_u32_le(in);
  const std::uint32_t n_modes = read_u32_le(in);
  if (channels < 1 || steps < 1 || n_modes < 1 || channels > 1u << 16 || steps > 1u << 24 ||
      n_modes > 1u << 20) {
    throw std::runtime_error("table load: implausible dimensions in header");
  }
  TriangularKernelTable table(static_cast<int>(channels), static_cast<int>(steps),
                              static_cast<int>(n_modes));
  for (int j = 0; j < table.channels(); ++j) {
    std::vector<double>& data = table.channel_data(j);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("table load: truncated payload in " + path);
  }
  in.peek();
  if (!in.eof()) throw std::runtime_error("table load: trailing bytes in " + path);
  return table;
}

}  // namespace gvf
