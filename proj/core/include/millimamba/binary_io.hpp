#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

// Little-endian primitives shared by the MMRC / MMH3 / MMH4 / MMCK formats.
namespace millimamba::io {

void write_magic(std::ostream& os, std::string_view magic);
void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);

// Returns false on clean EOF before the first byte; throws ValidationError on
// a mismatching or truncated magic.
bool read_magic(std::istream& is, std::string_view magic);
std::uint8_t read_u8(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
double read_f64(std::istream& is);
std::string read_bytes(std::istream& is, std::size_t n);

}  // namespace millimamba::io
