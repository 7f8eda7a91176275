#include "mpcforge/domain.hpp"

#include <sstream>

namespace mpcforge {

namespace {

// Deterministic Miller-Rabin, exact for n < 2^64 with the standard base set.
u64 mulmod64(u64 a, u64 b, u64 m) { return u64((u128(a) * b) % m); }

u64 powmod64(u64 a, u64 e, u64 m) {
  u64 r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod64(r, a, m);
    a = mulmod64(a, a, m);
    e >>= 1;
  }
  return r;
}

bool miller_rabin_u64(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  unsigned r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    u64 x = powmod64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (unsigned i = 1; i < r; ++i) {
      x = mulmod64(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

// Reduce a 256-bit value mod 2^127-1 by Mersenne folding.
u128 reduce_m127(U256 x) {
  // x = hi*2^256 ... treat as (hi:lo). 2^127 == 1 (mod p).
  u128 p = kMersenne127;
  u128 lo127 = x.lo & p;
  u128 rest = (x.lo >> 127) | (x.hi << 1);  // bits 127.. of x, < 2^129
  // rest may itself exceed p; fold twice.
  u128 acc = lo127 + (rest & p) + (rest >> 127);
  while (acc >= p) acc -= p;
  return acc;
}

u128 mulmod_m127(u128 a, u128 b) { return reduce_m127(mul_wide(a, b)); }

u128 mulmod_field(u128 a, u128 b, u128 p) {
  if (p <= ~u64{0}) return u64((u128(u64(a)) * u64(b)) % u64(p));
  if (p == kMersenne127) return mulmod_m127(a, b);
  fail(Errc::ParamError, "unsupported field modulus size");
}

u128 powmod_field(u128 a, U192 e, u128 p) {
  u128 r = 1 % p;
  unsigned n = bit_length(e);
  for (unsigned i = n; i-- > 0;) {
    r = mulmod_field(r, r, p);
    if (bit_at(e, i)) r = mulmod_field(r, a, p);
  }
  return r;
}

}  // namespace

bool is_prime_u128(u128 n) {
  if (n == kMersenne127) return true;
  if (n > ~u64{0}) return false;  // only the 127-bit Mersenne above 64 bits
  return miller_rabin_u64(u64(n));
}

Domain Domain::prime_field(u128 p, u16 s) {
  if (!is_prime_u128(p)) fail(Errc::ParamError, "modulus is not a supported prime");
  if (s < 1 || s > 64) fail(Errc::ParamError, "s out of range");
  Domain d;
  d.kind = DomainKind::PrimeField;
  d.modulus = p;
  d.k = u16(mpcforge::bit_length(p));
  d.s = s;
  return d;
}

Domain Domain::ring(u16 k, u16 s) {
  if (k < 2 || k > 192) fail(Errc::ParamError, "ring width out of range");
  if (s < 1 || s > 64) fail(Errc::ParamError, "s out of range");
  Domain d;
  d.kind = DomainKind::Ring;
  d.k = k;
  d.s = s;
  return d;
}

Domain Domain::binary() {
  Domain d;
  d.kind = DomainKind::Binary;
  d.k = 1;
  d.s = 40;
  return d;
}

Domain Domain::extended(u16 extra) const {
  if (kind != DomainKind::Ring) fail(Errc::ParamError, "only rings extend");
  return Domain::ring(u16(k + extra), s);
}

unsigned Domain::bit_length() const {
  switch (kind) {
    case DomainKind::PrimeField: return mpcforge::bit_length(modulus);
    case DomainKind::Ring: return k;
    case DomainKind::Binary: return 1;
  }
  return 1;
}

unsigned Domain::byte_length() const { return (bit_length() + 7) / 8; }

U192 Domain::order() const {
  switch (kind) {
    case DomainKind::PrimeField: return U192{modulus};
    case DomainKind::Ring: return k >= 192 ? U192{} : pow2_192(k);
    case DomainKind::Binary: return U192{2};
  }
  return U192{2};
}

std::string Domain::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case DomainKind::PrimeField:
      if (modulus == kMersenne61) {
        os << "Zp(2^61-1)";
      } else if (modulus == kMersenne127) {
        os << "Zp(2^127-1)";
      } else {
        os << "Zp(" << u64(modulus) << ")";
      }
      break;
    case DomainKind::Ring: os << "Z2^" << k; break;
    case DomainKind::Binary: os << "Z2"; break;
  }
  return os.str();
}

Elem make_elem(U192 raw, const Domain& d) {
  switch (d.kind) {
    case DomainKind::PrimeField: {
      if (raw.hi == 0 && raw.lo < d.modulus) return Elem(raw, d);
      // Fold the 192-bit value: for Mersenne moduli use shifts, else 64-bit %.
      if (d.modulus <= ~u64{0}) {
        // raw mod p via 128-bit chunks: raw = hi*2^128 + lo.
        u128 p = d.modulus;
        u128 two64 = ((u128(~u64{0}) % p) + 1) % p;  // 2^64 mod p
        u128 two128 = (two64 * two64) % p;
        u128 r = (u128(raw.hi) % p) * two128 % p;
        r = (r + raw.lo % p) % p;
        return Elem(U192{r}, d);
      }
      // p = 2^127-1
      U256 x{raw.lo, u128(raw.hi)};
      return Elem(U192{reduce_m127(x)}, d);
    }
    case DomainKind::Ring: return Elem(mask192(raw, d.k), d);
    case DomainKind::Binary: return Elem(U192{raw.lo & 1}, d);
  }
  return Elem(raw, d);
}

Elem zero(const Domain& d) { return Elem(U192{}, d); }
Elem one(const Domain& d) { return make_elem(U192{1}, d); }

namespace {
inline void check_same(const Elem& a, const Elem& b) {
  if (!(a.dom == b.dom)) fail(Errc::DomainMismatch, "operands in different domains");
}
}  // namespace

Elem add(const Elem& a, const Elem& b) {
  check_same(a, b);
  switch (a.dom.kind) {
    case DomainKind::PrimeField: {
      u128 r = a.v.lo + b.v.lo;  // both < p <= 2^127, no overflow
      if (r >= a.dom.modulus) r -= a.dom.modulus;
      return Elem(U192{r}, a.dom);
    }
    case DomainKind::Ring: return Elem(mask192(add192(a.v, b.v), a.dom.k), a.dom);
    case DomainKind::Binary: return Elem(U192{(a.v.lo ^ b.v.lo) & 1}, a.dom);
  }
  return a;
}

Elem sub(const Elem& a, const Elem& b) { return add(a, neg(b)); }

Elem neg(const Elem& a) {
  switch (a.dom.kind) {
    case DomainKind::PrimeField:
      return Elem(U192{a.v.lo == 0 ? u128{0} : a.dom.modulus - a.v.lo}, a.dom);
    case DomainKind::Ring: return Elem(mask192(sub192(U192{}, a.v), a.dom.k), a.dom);
    case DomainKind::Binary: return a;
  }
  return a;
}

Elem mul(const Elem& a, const Elem& b) {
  check_same(a, b);
  switch (a.dom.kind) {
    case DomainKind::PrimeField:
      return Elem(U192{mulmod_field(a.v.lo, b.v.lo, a.dom.modulus)}, a.dom);
    case DomainKind::Ring: return Elem(mask192(mul192(a.v, b.v), a.dom.k), a.dom);
    case DomainKind::Binary: return Elem(U192{a.v.lo & b.v.lo & 1}, a.dom);
  }
  return a;
}

Elem inv(const Elem& a) {
  switch (a.dom.kind) {
    case DomainKind::PrimeField: {
      if (a.is_zero()) fail(Errc::NotInvertible, "zero has no inverse");
      U192 e = sub192(U192{a.dom.modulus}, U192{2});
      return Elem(U192{powmod_field(a.v.lo, e, a.dom.modulus)}, a.dom);
    }
    case DomainKind::Ring: {
      if (!bit_at(a.v, 0)) fail(Errc::NotInvertible, "even element in Z_2^k");
      // Newton iteration x <- x(2 - a x), doubling valid bits each step.
      U192 x{1};
      for (int i = 0; i < 8; ++i) {
        U192 ax = mask192(mul192(a.v, x), a.dom.k);
        U192 t = mask192(sub192(U192{2}, ax), a.dom.k);
        x = mask192(mul192(x, t), a.dom.k);
      }
      return Elem(x, a.dom);
    }
    case DomainKind::Binary:
      if (a.is_zero()) fail(Errc::NotInvertible, "zero has no inverse");
      return a;
  }
  return a;
}

Elem pow(const Elem& a, U192 e) {
  Elem r = one(a.dom);
  unsigned n = bit_length(e);
  for (unsigned i = n; i-- > 0;) {
    r = mul(r, r);
    if (bit_at(e, i)) r = mul(r, a);
  }
  return r;
}

std::vector<u8> bit_decompose_plain(const Elem& x, unsigned m) {
  if (m < 192 && !(shl192(U192{1}, m) > x.v)) fail(Errc::Overflow, "value does not fit m bits");
  std::vector<u8> bits(m);
  for (unsigned i = 0; i < m; ++i) bits[i] = bit_at(x.v, i) ? 1 : 0;
  return bits;
}

U192 bit_recompose(const std::vector<u8>& bits) {
  U192 r;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] & 1) r = add192(r, pow2_192(unsigned(i)));
  return r;
}

Elem sample(Prg& prg, const Domain& d) {
  switch (d.kind) {
    case DomainKind::PrimeField: {
      unsigned bits = d.bit_length();
      for (;;) {
        u128 v = prg.next_bits(bits).lo;
        if (v < d.modulus) return Elem(U192{v}, d);
      }
    }
    case DomainKind::Ring: return Elem(prg.next_bits(d.k), d);
    case DomainKind::Binary: return Elem(U192{u128(prg.next_u8() & 1)}, d);
  }
  return zero(d);
}

std::vector<Elem> prg_sample(std::span<const u8> seed, const Domain& d, std::size_t n) {
  Prg prg(seed);
  std::vector<Elem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample(prg, d));
  return out;
}

}  // namespace mpcforge
