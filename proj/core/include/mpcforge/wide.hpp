#ifndef MPCFORGE_WIDE_HPP
#define MPCFORGE_WIDE_HPP

#include <cstdint>
#include <compare>

namespace mpcforge {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

// 192-bit unsigned integer, enough for any domain handled here: prime fields up
// to 2^127-1 and power-of-two rings up to Z_2^k with k+s <= 192 after the
// statistical extension used by ring MACs. Arithmetic wraps mod 2^192.
struct U192 {
  u128 lo = 0;
  u64 hi = 0;

  constexpr U192() = default;
  constexpr U192(u128 v) : lo(v), hi(0) {}  // NOLINT: implicit by design

  friend constexpr bool operator==(const U192& a, const U192& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
  friend constexpr auto operator<=>(const U192& a, const U192& b) {
    if (a.hi != b.hi) return a.hi <=> b.hi;
    return a.lo <=> b.lo;
  }
};

struct U256 {
  u128 lo = 0;
  u128 hi = 0;
};

// 128x128 -> 256 product from 64-bit halves.
inline U256 mul_wide(u128 a, u128 b) {
  const u64 a0 = static_cast<u64>(a), a1 = static_cast<u64>(a >> 64);
  const u64 b0 = static_cast<u64>(b), b1 = static_cast<u64>(b >> 64);
  const u128 p00 = static_cast<u128>(a0) * b0;
  const u128 p01 = static_cast<u128>(a0) * b1;
  const u128 p10 = static_cast<u128>(a1) * b0;
  const u128 p11 = static_cast<u128>(a1) * b1;

  const u128 mid = (p00 >> 64) + static_cast<u64>(p01) + static_cast<u64>(p10);
  U256 r;
  r.lo = (mid << 64) | static_cast<u64>(p00);
  r.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  return r;
}

inline U192 add192(const U192& a, const U192& b) {
  U192 r;
  r.lo = a.lo + b.lo;
  r.hi = a.hi + b.hi + (r.lo < a.lo ? 1 : 0);
  return r;
}

inline U192 sub192(const U192& a, const U192& b) {
  U192 r;
  r.lo = a.lo - b.lo;
  r.hi = a.hi - b.hi - (a.lo < b.lo ? 1 : 0);
  return r;
}

// Low 192 bits of the 384-bit product. Cross terms land at offset 128, so only
// their low 64 bits survive.
inline U192 mul192(const U192& a, const U192& b) {
  U256 ll = mul_wide(a.lo, b.lo);
  u64 cross = static_cast<u64>(a.lo) * b.hi + a.hi * static_cast<u64>(b.lo);
  U192 r;
  r.lo = ll.lo;
  r.hi = static_cast<u64>(ll.hi) + cross;
  return r;
}

// Keep the low `bits` bits (bits <= 192).
inline U192 mask192(const U192& a, unsigned bits) {
  U192 r = a;
  if (bits >= 192) return r;
  if (bits >= 128) {
    unsigned h = bits - 128;
    r.hi = h == 0 ? 0 : (r.hi & ((u64{1} << h) - 1));
  } else {
    r.hi = 0;
    r.lo = bits == 0 ? 0 : (r.lo & ((~u128{0}) >> (128 - bits)));
  }
  return r;
}

inline bool is_zero(const U192& a) { return a.lo == 0 && a.hi == 0; }

inline unsigned bit_length(u128 v) {
  unsigned n = 0;
  while (v) {
    ++n;
    v >>= 1;
  }
  return n;
}

inline unsigned bit_length(const U192& v) {
  if (v.hi) return 128 + bit_length(static_cast<u128>(v.hi));
  return bit_length(v.lo);
}

inline bool bit_at(const U192& v, unsigned i) {
  if (i < 128) return ((v.lo >> i) & 1) != 0;
  return ((v.hi >> (i - 128)) & 1) != 0;
}

inline U192 shl192(const U192& a, unsigned n) {
  if (n == 0) return a;
  U192 r;
  if (n >= 192) return r;
  if (n >= 128) {
    r.lo = 0;
    r.hi = static_cast<u64>(a.lo << (n - 128));
    return r;
  }
  r.lo = a.lo << n;
  r.hi = (n < 64 ? a.hi << n : 0) | static_cast<u64>(a.lo >> (128 - n));
  return r;
}

inline U192 pow2_192(unsigned i) { return shl192(U192{1}, i); }

// 2-adic valuation; 192 for zero.
inline unsigned valuation2(const U192& a) {
  if (is_zero(a)) return 192;
  for (unsigned i = 0; i < 192; ++i)
    if (bit_at(a, i)) return i;
  return 192;
}

}  // namespace mpcforge

#endif
