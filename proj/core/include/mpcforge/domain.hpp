#ifndef MPCFORGE_DOMAIN_HPP
#define MPCFORGE_DOMAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mpcforge/errors.hpp"
#include "mpcforge/prg.hpp"
#include "mpcforge/wide.hpp"

namespace mpcforge {

enum class DomainKind : u8 { PrimeField, Ring, Binary };

// Computation domain: Z_p for prime p, Z_2^k, or single bits. `s` is the
// statistical security parameter carried along for ring MACs and masked
// sharing; it does not change the element set.
//
// Prime fields support any p < 2^64 plus the Mersenne primes 2^61-1 and
// 2^127-1 (the defaults for 64- and 128-bit runs). Rings support k up to 192
// so that MAC-extended values Z_2^(k+s) still fit one element.
struct Domain {
  DomainKind kind = DomainKind::Binary;
  u128 modulus = 2;  // PrimeField only
  u16 k = 1;         // Ring width in bits
  u16 s = 40;        // statistical security bits

  static Domain prime_field(u128 p, u16 s = 40);
  static Domain ring(u16 k, u16 s = 40);
  static Domain binary();

  // Extended ring Z_2^(k+extra) used by ring MACs and masked input.
  Domain extended(u16 extra) const;

  bool operator==(const Domain& o) const {
    if (kind != o.kind) return false;
    if (kind == DomainKind::PrimeField) return modulus == o.modulus;
    if (kind == DomainKind::Ring) return k == o.k;
    return true;
  }

  unsigned bit_length() const;   // bits needed for one element
  unsigned byte_length() const;  // serialized width
  U192 order() const;            // number of elements (0 means 2^192)
  std::string to_string() const;
};

constexpr u128 kMersenne61 = (u128{1} << 61) - 1;
constexpr u128 kMersenne127 = (u128{1} << 127) - 1;

struct Elem {
  U192 v;
  Domain dom;

  Elem() = default;
  Elem(U192 value, const Domain& d) : v(value), dom(d) {}

  bool is_zero() const { return mpcforge::is_zero(v); }
  u64 as_u64() const { return static_cast<u64>(v.lo); }
  bool operator==(const Elem& o) const { return v == o.v && dom == o.dom; }
};

// Construction (reduces the raw value into the domain).
Elem make_elem(U192 raw, const Domain& d);
inline Elem make_elem(u128 raw, const Domain& d) { return make_elem(U192{raw}, d); }

Elem zero(const Domain& d);
Elem one(const Domain& d);

// Exact modular arithmetic. Mixed-domain operands raise DomainMismatch;
// inverting 0 in a field or an even ring element raises NotInvertible.
Elem add(const Elem& a, const Elem& b);
Elem sub(const Elem& a, const Elem& b);
Elem mul(const Elem& a, const Elem& b);
Elem neg(const Elem& a);
Elem inv(const Elem& a);
Elem pow(const Elem& a, U192 e);

inline Elem operator+(const Elem& a, const Elem& b) { return add(a, b); }
inline Elem operator-(const Elem& a, const Elem& b) { return sub(a, b); }
inline Elem operator*(const Elem& a, const Elem& b) { return mul(a, b); }
inline Elem operator-(const Elem& a) { return neg(a); }

// Little-endian plain bit decomposition; Overflow if x >= 2^m.
std::vector<u8> bit_decompose_plain(const Elem& x, unsigned m);
U192 bit_recompose(const std::vector<u8>& bits);

// Deterministic uniform sampling over the domain (rejection sampled).
Elem sample(Prg& prg, const Domain& d);
std::vector<Elem> prg_sample(std::span<const u8> seed, const Domain& d, std::size_t n);

bool is_prime_u128(u128 n);

}  // namespace mpcforge

#endif
