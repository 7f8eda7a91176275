#include <cmath>
#include <map>

#include "doctest.h"
#include "mpcforge/domain.hpp"
#include "mpcforge/poly.hpp"

using namespace mpcforge;

namespace {

// Reference mulmod by double-and-add; independent of the production multiply.
Elem slow_mul(const Elem& a, const Elem& b) {
  Elem acc = zero(a.dom);
  Elem base = a;
  for (unsigned i = 0; i < 192; ++i) {
    if (bit_at(b.v, i)) acc = add(acc, base);
    base = add(base, base);
  }
  return acc;
}

}  // namespace

TEST_CASE("modular add and inverse, small fields") {
  Domain z7 = Domain::prime_field(7);
  CHECK(add(make_elem(3, z7), make_elem(5, z7)).as_u64() == 1);

  // Brute-force inverse oracle
  u64 expected = 0;
  for (u64 x = 1; x < 7; ++x)
    if (3 * x % 7 == 1) expected = x;
  CHECK(expected == 5);
  CHECK(inv(make_elem(3, z7)).as_u64() == expected);

  Domain r4 = Domain::ring(4);
  CHECK_THROWS_AS(inv(make_elem(4, r4)), Error);
  CHECK_THROWS_AS(inv(zero(z7)), Error);
}

TEST_CASE("domain mismatch is rejected") {
  Domain z7 = Domain::prime_field(7);
  Domain z11 = Domain::prime_field(11);
  CHECK_THROWS_AS(add(make_elem(1, z7), make_elem(1, z11)), Error);
}

TEST_CASE("field axioms hold exhaustively for p <= 31") {
  for (u64 p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31}) {
    Domain d = Domain::prime_field(p);
    for (u64 a = 0; a < p; ++a) {
      Elem ea = make_elem(a, d);
      if (a != 0) {
        Elem ai = inv(ea);
        CHECK(mul(ea, ai).as_u64() == 1);
      }
      for (u64 b = 0; b < p; ++b) {
        Elem eb = make_elem(b, d);
        CHECK(add(ea, eb).as_u64() == (a + b) % p);
        CHECK(mul(ea, eb).as_u64() == a * b % p);
        for (u64 c = 0; c < p; ++c) {
          Elem ec = make_elem(c, d);
          CHECK(mul(ea, add(eb, ec)) == add(mul(ea, eb), mul(ea, ec)));
          CHECK(add(ea, add(eb, ec)) == add(add(ea, eb), ec));
        }
      }
    }
  }
}

TEST_CASE("ring invertibility: exactly the odd elements, k <= 8") {
  for (u16 k = 2; k <= 8; ++k) {
    Domain d = Domain::ring(k);
    u64 invertible = 0;
    for (u64 a = 0; a < (u64(1) << k); ++a) {
      Elem ea = make_elem(a, d);
      try {
        Elem ai = inv(ea);
        CHECK(mul(ea, ai).as_u64() == 1);
        ++invertible;
      } catch (const Error& e) {
        CHECK(e.code() == Errc::NotInvertible);
        CHECK(a % 2 == 0);
      }
    }
    CHECK(invertible == (u64(1) << (k - 1)));
  }
}

TEST_CASE("wide moduli agree with a double-and-add reference") {
  Prg prg(7u);
  for (auto dom : {Domain::prime_field(kMersenne61), Domain::prime_field(kMersenne127),
                   Domain::ring(104), Domain::ring(168)}) {
    for (int i = 0; i < 50; ++i) {
      Elem a = sample(prg, dom);
      Elem b = sample(prg, dom);
      CHECK(mul(a, b) == slow_mul(a, b));
    }
  }
  // Ring inverses above 128 bits
  Domain big = Domain::ring(168);
  for (int i = 0; i < 20; ++i) {
    Elem a = sample(prg, big);
    a.v.lo |= 1;
    CHECK(mul(a, inv(a)) == one(big));
  }
}

TEST_CASE("polynomial evaluation") {
  Domain z7 = Domain::prime_field(7);
  Polynomial constant = make_poly({make_elem(4, z7)});
  for (u64 z = 0; z < 7; ++z) CHECK(poly_eval(constant, make_elem(z, z7)).as_u64() == 4);

  // f = 2 + 3z at z=4: hand evaluation 2 + 12 = 14 = 0 mod 7
  Polynomial f = make_poly({make_elem(2, z7), make_elem(3, z7)});
  CHECK(poly_eval(f, make_elem(4, z7)).as_u64() == (2 + 3 * 4) % 7);
  CHECK(poly_eval(f, make_elem(4, z7)).as_u64() == 0);

  Polynomial zero_poly = make_poly({zero(z7), zero(z7), zero(z7)});
  for (u64 z = 0; z < 7; ++z) CHECK(poly_eval(zero_poly, make_elem(z, z7)).is_zero());
}

TEST_CASE("interpolation recovers polynomials of degree < #points") {
  Domain z11 = Domain::prime_field(11);
  SUBCASE("single point gives a constant") {
    Polynomial f = poly_interpolate({{make_elem(1, z11), make_elem(9, z11)}});
    CHECK(f.coeffs.size() == 1);
    CHECK(f.coeffs[0].as_u64() == 9);
  }
  SUBCASE("round trip against poly_eval, degree 2") {
    Prg prg(11u);
    for (int trial = 0; trial < 25; ++trial) {
      Polynomial f =
          make_poly({sample(prg, z11), sample(prg, z11), sample(prg, z11)});
      std::vector<std::pair<Elem, Elem>> pts;
      for (u64 z = 1; z <= 3; ++z)
        pts.emplace_back(make_elem(z, z11), poly_eval(f, make_elem(z, z11)));
      Polynomial g = poly_interpolate(pts);
      REQUIRE(g.coeffs.size() == f.coeffs.size());
      for (std::size_t i = 0; i < f.coeffs.size(); ++i) CHECK(f.coeffs[i] == g.coeffs[i]);
    }
  }
  SUBCASE("duplicate points rejected") {
    CHECK_THROWS_AS(poly_interpolate({{make_elem(1, z11), make_elem(2, z11)},
                                      {make_elem(1, z11), make_elem(3, z11)}}),
                    Error);
  }
}

TEST_CASE("plain bit decomposition") {
  Domain r8 = Domain::ring(8);
  auto bits = bit_decompose_plain(make_elem(5, r8), 4);
  CHECK(bits == std::vector<u8>{1, 0, 1, 0});
  CHECK(bit_decompose_plain(zero(r8), 5) == std::vector<u8>{0, 0, 0, 0, 0});
  CHECK_THROWS_AS(bit_decompose_plain(make_elem(9, r8), 3), Error);

  for (u64 x = 0; x < 256; ++x) {
    auto b = bit_decompose_plain(make_elem(x, r8), 8);
    CHECK(bit_recompose(b) == U192{u128(x)});
  }
}

TEST_CASE("prg sampling is deterministic and uniform") {
  Domain z11 = Domain::prime_field(11);
  std::string seed = "prg-test-seed";
  auto span_of = [](const std::string& s) {
    return std::span<const u8>(reinterpret_cast<const u8*>(s.data()), s.size());
  };
  auto a = prg_sample(span_of(seed), z11, 1000);
  auto b = prg_sample(span_of(seed), z11, 1000);
  CHECK(a == b);

  auto c = prg_sample(span_of("another-seed"), z11, 1000);
  CHECK(a != c);

  // Chi-squared over Z_11 with n = 1e5: mean 10, sigma sqrt(20) for 10 dof.
  std::size_t n = 100000;
  auto big = prg_sample(span_of(seed), z11, n);
  std::map<u64, u64> counts;
  for (const auto& e : big) counts[e.as_u64()]++;
  double expected = double(n) / 11.0;
  double chi2 = 0;
  for (u64 v = 0; v < 11; ++v) {
    double diff = double(counts[v]) - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 10.0 + 3.0 * std::sqrt(20.0));

  CHECK_THROWS_AS(prg_sample(std::span<const u8>(), z11, 1), Error);
}

TEST_CASE("u192 helpers") {
  U192 a = pow2_192(100);
  CHECK(bit_length(a) == 101);
  CHECK(valuation2(a) == 100);
  U192 b = sub192(a, U192{1});
  CHECK(bit_length(b) == 100);
  CHECK(valuation2(U192{}) == 192);
  CHECK(mask192(a, 100) == U192{});
}
