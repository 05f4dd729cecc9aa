#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace tamperloc::binary {

// Little-endian scalar encoding independent of the host byte order.

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
bool get_le(std::istream& in, U& v) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return true;
}

inline void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
inline void put_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

inline bool get_u32(std::istream& in, std::uint32_t& v) { return get_le(in, v); }
inline bool get_f32(std::istream& in, float& v) {
  std::uint32_t u = 0;
  if (!get_le(in, u)) return false;
  v = std::bit_cast<float>(u);
  return true;
}
inline bool get_f64(std::istream& in, double& v) {
  std::uint64_t u = 0;
  if (!get_le(in, u)) return false;
  v = std::bit_cast<double>(u);
  return true;
}

}  // namespace tamperloc::binary
