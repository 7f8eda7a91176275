#include "mpcforge/prg.hpp"

#include <cstring>

#include "mpcforge/digest.hpp"
#include "mpcforge/errors.hpp"

namespace mpcforge {

namespace {

inline u32 rotl(u32 x, unsigned n) { return (x << n) | (x >> (32 - n)); }

inline void quarter(u32& a, u32& b, u32& c, u32& d) {
  a += b;
  d = rotl(d ^ a, 16);
  c += d;
  b = rotl(b ^ c, 12);
  a += b;
  d = rotl(d ^ a, 8);
  c += d;
  b = rotl(b ^ c, 7);
}

void chacha20_block(const std::array<u8, 32>& key, u64 counter, std::array<u8, 64>& out) {
  u32 st[16];
  st[0] = 0x61707865;
  st[1] = 0x3320646e;
  st[2] = 0x79622d32;
  st[3] = 0x6b206574;
  for (int i = 0; i < 8; ++i) {
    st[4 + i] = u32(key[4 * i]) | (u32(key[4 * i + 1]) << 8) | (u32(key[4 * i + 2]) << 16) |
                (u32(key[4 * i + 3]) << 24);
  }
  st[12] = u32(counter);
  st[13] = u32(counter >> 32);
  st[14] = 0;
  st[15] = 0;

  u32 w[16];
  std::memcpy(w, st, sizeof(w));
  for (int round = 0; round < 10; ++round) {
    quarter(w[0], w[4], w[8], w[12]);
    quarter(w[1], w[5], w[9], w[13]);
    quarter(w[2], w[6], w[10], w[14]);
    quarter(w[3], w[7], w[11], w[15]);
    quarter(w[0], w[5], w[10], w[15]);
    quarter(w[1], w[6], w[11], w[12]);
    quarter(w[2], w[7], w[8], w[13]);
    quarter(w[3], w[4], w[9], w[14]);
  }
  for (int i = 0; i < 16; ++i) {
    u32 v = w[i] + st[i];
    out[4 * i] = u8(v);
    out[4 * i + 1] = u8(v >> 8);
    out[4 * i + 2] = u8(v >> 16);
    out[4 * i + 3] = u8(v >> 24);
  }
}

}  // namespace

Prg::Prg(std::span<const u8> seed) {
  if (seed.empty()) fail(Errc::ParamError, "prg seed must be non-empty");
  if (seed.size() == 32) {
    std::memcpy(key_.data(), seed.data(), 32);
  } else {
    key_ = Sha256::of(seed);
  }
}

Prg::Prg(const std::string& seed)
    : Prg(std::span<const u8>(reinterpret_cast<const u8*>(seed.data()), seed.size())) {}

Prg::Prg(u64 seed) {
  u8 buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = u8(seed >> (8 * i));
  key_ = Sha256::of(std::span<const u8>(buf, 8));
}

Prg Prg::fork(const std::string& label) const {
  Sha256 h;
  h.update(std::span<const u8>(key_.data(), key_.size()));
  h.update(label);
  Digest d = h.finish();
  return Prg(std::span<const u8>(d.data(), d.size()));
}

void Prg::refill() {
  chacha20_block(key_, counter_++, block_);
  used_ = 0;
}

void Prg::fill(std::span<u8> out) {
  for (auto& b : out) {
    if (used_ == 64) refill();
    b = block_[used_++];
  }
}

u8 Prg::next_u8() {
  if (used_ == 64) refill();
  return block_[used_++];
}

u64 Prg::next_u64() {
  u8 buf[8];
  fill(std::span<u8>(buf, 8));
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= u64(buf[i]) << (8 * i);
  return v;
}

u128 Prg::next_u128() {
  u128 lo = next_u64();
  u128 hi = next_u64();
  return (hi << 64) | lo;
}

U192 Prg::next_bits(unsigned bits) {
  U192 r;
  if (bits == 0) return r;
  r.lo = next_u128();
  if (bits > 128) r.hi = next_u64();
  return mask192(r, bits);
}

u64 Prg::below(u64 bound) {
  if (bound == 0) fail(Errc::ParamError, "below(0)");
  if ((bound & (bound - 1)) == 0) return next_u64() & (bound - 1);
  // Rejection sampling on the top multiple of bound.
  u64 limit = ~u64{0} - (~u64{0} % bound) - 1;
  for (;;) {
    u64 v = next_u64();
    if (v <= limit) return v % bound;
  }
}

std::vector<u32> Prg::permutation(u32 n) {
  std::vector<u32> p(n);
  for (u32 i = 0; i < n; ++i) p[i] = i;
  for (u32 i = n; i > 1; --i) {
    u32 j = u32(below(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace mpcforge
