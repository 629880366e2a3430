#include "millimamba/binary_io.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>

#include "millimamba/error.hpp"

namespace millimamba::io {
namespace {

template <typename U>
void write_le(std::ostream& os, U v) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes.data(), bytes.size());
}

template <typename U>
U read_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) fail("binary stream truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_magic(std::ostream& os, std::string_view magic) { os.write(magic.data(), magic.size()); }
void write_u8(std::ostream& os, std::uint8_t v) { write_le(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { write_le(os, v); }
void write_f32(std::ostream& os, float v) { write_le(os, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& os, double v) { write_le(os, std::bit_cast<std::uint64_t>(v)); }

bool read_magic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), got.size());
  if (is.gcount() == 0 && is.eof()) return false;
  if (is.gcount() != static_cast<std::streamsize>(magic.size()) || got != magic) {
    fail("bad magic: expected '" + std::string(magic) + "'");
  }
  return true;
}

std::uint8_t read_u8(std::istream& is) { return read_le<std::uint8_t>(is); }
std::uint32_t read_u32(std::istream& is) { return read_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return read_le<std::uint64_t>(is); }
float read_f32(std::istream& is) { return std::bit_cast<float>(read_le<std::uint32_t>(is)); }
double read_f64(std::istream& is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }

std::string read_bytes(std::istream& is, std::size_t n) {
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n)) fail("binary stream truncated");
  return s;
}

}  // namespace millimamba::io
