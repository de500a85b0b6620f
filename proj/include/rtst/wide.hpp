#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace rtst {

// Arbitrary-width unsigned arithmetic for range keys. Concatenated DST keys
// run to hundreds of bits.
using Wide = boost::multiprecision::cpp_int;

inline Wide low_mask(unsigned bits) {
  Wide m = 1;
  m <<= bits;
  return m - 1;
}

// Lowercase hex with 0x prefix.
std::string to_hex(const Wide& v);
Wide from_hex(std::string_view text);

// Minimal number of whole bytes to hold `bits`.
constexpr std::size_t bytes_for_bits(std::size_t bits) { return (bits + 7) / 8; }

}  // namespace rtst
