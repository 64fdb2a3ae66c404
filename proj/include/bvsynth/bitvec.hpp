#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace bvsynth {

// Mask with the low `width` bits set. width must be in [1, 64].
constexpr std::uint64_t width_mask(unsigned width) noexcept {
  return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

// Fixed-width unsigned bitvector. Bits above `width` are always zero.
class BitVecValue {
 public:
  constexpr BitVecValue() = default;
  constexpr BitVecValue(unsigned width, std::uint64_t bits)
      : width_(width), bits_(bits & width_mask(width)) {}

  constexpr unsigned width() const noexcept { return width_; }
  constexpr std::uint64_t bits() const noexcept { return bits_; }

  // Lower-case `#x` literal zero-padded to ceil(width / 4) digits.
  // Widths that are not a multiple of four print as `#b`.
  std::string to_literal() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    if (width_ % 4 == 0) {
      out = "#x";
      for (int shift = static_cast<int>(width_) - 4; shift >= 0; shift -= 4)
        out.push_back(kHex[(bits_ >> shift) & 0xF]);
    } else {
      out = "#b";
      for (int bit = static_cast<int>(width_) - 1; bit >= 0; --bit)
        out.push_back(((bits_ >> bit) & 1) ? '1' : '0');
    }
    return out;
  }

  friend constexpr bool operator==(const BitVecValue&, const BitVecValue&) = default;

 private:
  unsigned width_ = 64;
  std::uint64_t bits_ = 0;
};

}  // namespace bvsynth

template <>
struct std::hash<bvsynth::BitVecValue> {
  std::size_t operator()(const bvsynth::BitVecValue& v) const noexcept {
    return std::hash<std::uint64_t>{}(v.bits() * 0x9E3779B97F4A7C15ull ^ v.width());
  }
};
