#ifndef MPCFORGE_CIRCUITS_HPP
#define MPCFORGE_CIRCUITS_HPP

#include <span>
#include <vector>

#include "mpcforge/engine.hpp"

namespace mpcforge::circuits {

// Bit-vector gadgets on the boolean side of a session, batched across
// instances: one AND layer per carry position regardless of how many
// instances are processed, so round counts depend on the width only.
//
// The *_ands functions are the exact AND-gate counts per instance; planners
// and the consumption tests rely on them matching the implementations.

constexpr u64 add_public_ands(unsigned w) { return w >= 2 ? w - 2 : 0; }
constexpr u64 add_shared_ands(unsigned w) { return w >= 1 ? w - 1 : 0; }
constexpr u64 carry_save_ands(unsigned w) { return w >= 1 ? w - 1 : 0; }
constexpr u64 comparator_ands(unsigned w) { return w == 0 ? 0 : 3 * u64(w) - 2; }
constexpr u64 mux_ands(unsigned w) { return w; }
constexpr u64 mul_ands(unsigned w) {
  // partial products w(w+1)/2, accumulation sum_(h=1..w-1)(w-1-h+1)
  u64 pp = u64(w) * (w + 1) / 2;
  u64 adds = 0;
  for (unsigned h = 1; h < w; ++h) adds += w - h;
  return pp + adds;
}

// Local helpers.
Share bit_xor(Session& s, const Share& a, const Share& b);
Share bit_xor_public(Session& s, const Share& a, bool pub);
Share bit_and_public(const Share& a, bool pub);

// out = (pub + b) mod 2^w per instance; pub given little-endian.
std::vector<BitVec> add_public(Session& s, std::span<const std::vector<u8>> pub_bits,
                               std::span<const BitVec> b);

// out = (a + b) mod 2^w.
std::vector<BitVec> add_shared(Session& s, std::span<const BitVec> a, std::span<const BitVec> b);

// Reduce three addends to two (sum, carry<<1) and ripple: used by the local
// share conversion, where x = x_0 + x_1 + x_2 mod 2^w.
std::vector<BitVec> add3(Session& s, std::span<const BitVec> x0, std::span<const BitVec> x1,
                         std::span<const BitVec> x2);

// Unsigned a < b, one output bit per instance (MSB-first merge tree).
BitVec less_than(Session& s, std::span<const BitVec> a, std::span<const BitVec> b);

// out = cond ? a : b, bitwise per instance.
std::vector<BitVec> mux(Session& s, std::span<const Share> cond, std::span<const BitVec> a,
                        std::span<const BitVec> b);

// out = (a * b) mod 2^w (schoolbook shift-and-add).
std::vector<BitVec> mul_shared(Session& s, std::span<const BitVec> a, std::span<const BitVec> b);

// ---- arithmetic-bit variants (bits carried as 0/1 arithmetic shares) ----

// a < b where operand bits are arithmetic shares; one mult per AND-equivalent.
std::vector<SVal> less_than_arith(Session& s, std::span<const std::vector<SVal>> a,
                                  std::span<const std::vector<SVal>> b);
constexpr u64 less_than_arith_mults(unsigned w) { return w == 0 ? 0 : 3 * u64(w) - 2; }

// Bits of (pub + u) mod 2^w from arithmetic bit shares of u.
std::vector<std::vector<SVal>> add_public_arith(Session& s,
                                                std::span<const std::vector<u8>> pub_bits,
                                                std::span<const std::vector<SVal>> u);
constexpr u64 add_public_arith_mults(unsigned w) {
  // per carry: one product; per sum bit: one product for the xor
  return w >= 2 ? (u64(w) - 2) + (u64(w) - 1) : 0;
}

}  // namespace mpcforge::circuits

#endif
