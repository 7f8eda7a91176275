#include <cmath>
#include <map>

#include "doctest.h"
#include "mpcforge/poly.hpp"
#include "mpcforge/sharing.hpp"
#include "mpcforge/transport.hpp"

using namespace mpcforge;

namespace {

Elem reconstruct_subset(const std::vector<Share>& shares, std::initializer_list<int> idx) {
  std::vector<Share> subset;
  for (int i : idx) subset.push_back(shares[std::size_t(i)]);
  return reconstruct(subset);
}

double chi2_against_uniform(const std::map<u64, u64>& counts, double n, double bins) {
  double expected = n / bins;
  double chi2 = 0;
  for (u64 v = 0; v < u64(bins); ++v) {
    auto it = counts.find(v);
    double obs = it == counts.end() ? 0.0 : double(it->second);
    chi2 += (obs - expected) * (obs - expected) / expected;
  }
  return chi2;
}

}  // namespace

TEST_CASE("additive sharing reconstructs") {
  Domain z11 = Domain::prime_field(11);
  Prg prg(1u);
  auto shares = share_additive(make_elem(5, z11), 3, prg);
  u64 total = 0;
  for (const auto& s : shares) total += s.component(0).as_u64();
  CHECK(total % 11 == 5);
  CHECK(reconstruct(shares).as_u64() == 5);

  auto zeros = share_additive(zero(z11), 3, prg);
  CHECK(reconstruct(zeros).is_zero());

  // Enumeration oracle: every x in Z_5, n=2, across 100 seeds.
  Domain z5 = Domain::prime_field(5);
  for (u64 x = 0; x < 5; ++x) {
    for (u64 seed = 0; seed < 100; ++seed) {
      Prg p(seed);
      CHECK(reconstruct(share_additive(make_elem(x, z5), 2, p)).as_u64() == x);
    }
  }
  CHECK_THROWS_AS(share_additive(make_elem(1, z5), 1, prg), Error);
}

TEST_CASE("xor sharing over bits") {
  Domain b = Domain::binary();
  Prg prg(2u);
  for (u64 x : {0, 1}) {
    auto sh = share_xor(make_elem(x, b), 4, prg);
    u64 acc = 0;
    for (const auto& s : sh) acc ^= s.component(0).as_u64();
    CHECK(acc == x);
    CHECK(reconstruct(sh).as_u64() == x);
  }
  // Exhaustive 8-bit string round trip.
  for (u64 word = 0; word < 256; ++word) {
    std::vector<u8> bits(8);
    for (int i = 0; i < 8; ++i) bits[i] = u8((word >> i) & 1);
    auto per_party = share_xor_string(bits, 3, prg);
    for (int i = 0; i < 8; ++i) {
      std::vector<Share> column{per_party[0][i], per_party[1][i], per_party[2][i]};
      CHECK(reconstruct(column).as_u64() == bits[i]);
    }
  }
}

TEST_CASE("rep3 sharing: every pair reconstructs, exhaustively over Z_2^4") {
  Domain r4 = Domain::ring(4);
  for (u64 x = 0; x < 16; ++x) {
    for (u64 seed = 0; seed < 64; ++seed) {
      Prg prg(seed * 31 + x);
      auto sh = share_rep3(make_elem(x, r4), prg);
      CHECK(reconstruct_subset(sh, {0, 1}).as_u64() == x);
      CHECK(reconstruct_subset(sh, {1, 2}).as_u64() == x);
      CHECK(reconstruct_subset(sh, {0, 2}).as_u64() == x);
      CHECK(reconstruct(sh).as_u64() == x);
    }
  }
  Prg prg(3u);
  CHECK(reconstruct(share_rep3(zero(r4), prg)).is_zero());
}

TEST_CASE("rep3 replicated-value view matches a_i = v_(i-1) - x") {
  Domain r8 = Domain::ring(8);
  Prg prg(4u);
  for (int trial = 0; trial < 50; ++trial) {
    Elem x = sample(prg, r8);
    auto sh = share_rep3(x, prg);
    for (int i = 0; i < 3; ++i) {
      Elem v_prev = sh[std::size_t((i + 2) % 3)].rep3_v();
      CHECK(sh[std::size_t(i)].rep3_a() == sub(v_prev, x));
    }
  }
}

TEST_CASE("rep3 single share is uniform") {
  Domain r4 = Domain::ring(4);
  std::map<u64, u64> counts;
  const int trials = 4000;
  for (int seed = 0; seed < trials; ++seed) {
    Prg prg{u64(seed)};
    auto sh = share_rep3(make_elem(9, r4), prg);
    u64 key = sh[1].component(0).as_u64() | (sh[1].component(1).as_u64() << 4);
    counts[key]++;
  }
  // 256 buckets; chi-squared 3 sigma on 255 dof.
  double dof = 255;
  CHECK(chi2_against_uniform(counts, trials, 256) < dof + 3 * std::sqrt(2 * dof));
}

TEST_CASE("shamir sharing") {
  Domain z11 = Domain::prime_field(11);
  Prg prg(5u);

  SUBCASE("t=1 means a constant polynomial") {
    auto sh = share_shamir(make_elem(7, z11), 4, 1, prg);
    for (const auto& s : sh) CHECK(s.component(0).as_u64() == 7);
  }
  SUBCASE("t=2, n=3: every pair interpolates to x") {
    for (u64 x = 0; x < 11; ++x) {
      auto sh = share_shamir(make_elem(x, z11), 3, 2, prg);
      CHECK(reconstruct_subset(sh, {0, 1}).as_u64() == x);
      CHECK(reconstruct_subset(sh, {1, 2}).as_u64() == x);
      CHECK(reconstruct_subset(sh, {0, 2}).as_u64() == x);
    }
  }
  SUBCASE("t-1 shares are consistent with every candidate secret") {
    Domain z7 = Domain::prime_field(7);
    for (u64 x = 0; x < 7; ++x) {
      for (u64 seed = 0; seed < 10; ++seed) {
        Prg p(seed);
        auto sh = share_shamir(make_elem(x, z7), 3, 2, p);
        // One share (t-1 = 1); for every candidate secret a degree-1
        // polynomial exists through (0, candidate) and the share point.
        for (u64 candidate = 0; candidate < 7; ++candidate) {
          auto f = poly_interpolate(
              {{zero(z7), make_elem(candidate, z7)}, {sh[1].shamir_z(), sh[1].component(0)}});
          CHECK(poly_eval(f, zero(z7)).as_u64() == candidate);
        }
      }
    }
  }
  SUBCASE("parameter errors") {
    CHECK_THROWS_AS(share_shamir(make_elem(1, z11), 3, 4, prg), Error);
    CHECK_THROWS_AS(share_shamir(make_elem(1, z11), 12, 2, prg), Error);
  }
}

TEST_CASE("rep4 sharing reconstructs from any two parties") {
  Domain r8 = Domain::ring(8);
  Prg prg(6u);
  for (int trial = 0; trial < 40; ++trial) {
    Elem x = sample(prg, r8);
    auto sh = share_rep4(x, prg);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) CHECK(reconstruct_subset(sh, {i, j}) == x);
  }
}

TEST_CASE("reconstruct flags tampering and bad input") {
  Domain r8 = Domain::ring(8);
  Prg prg(7u);
  auto sh = share_rep3(make_elem(77, r8), prg);

  SUBCASE("corrupted replica") {
    sh[2].set_component(1, add(sh[2].component(1), one(r8)));
    CHECK_THROWS_AS(reconstruct(sh), Error);
    try {
      reconstruct(sh);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InconsistentReplicas);
    }
  }
  SUBCASE("mixed schemes") {
    auto other = share_additive(make_elem(1, r8), 3, prg);
    std::vector<Share> mixed{sh[0], other[1]};
    CHECK_THROWS_AS(reconstruct(mixed), Error);
  }
  SUBCASE("insufficient shares") {
    auto add3 = share_additive(make_elem(4, r8), 3, prg);
    std::vector<Share> partial{add3[0], add3[1]};
    CHECK_THROWS_AS(reconstruct(partial), Error);
    std::vector<Share> lone{sh[0]};
    CHECK_THROWS_AS(reconstruct(lone), Error);
  }
}

TEST_CASE("local linear combinations") {
  Prg prg(8u);
  Domain z11 = Domain::prime_field(11);
  struct Case {
    Scheme scheme;
    u16 n;
    u16 t;
  };
  for (auto [scheme, n, t] : {Case{Scheme::Additive, 3, 0}, Case{Scheme::Rep3, 3, 0},
                              Case{Scheme::Shamir, 3, 2}, Case{Scheme::Rep4, 4, 0}}) {
    for (int trial = 0; trial < 20; ++trial) {
      Elem x = sample(prg, z11);
      Elem y = sample(prg, z11);
      auto xs = share_secret(scheme, x, n, t, prg);
      auto ys = share_secret(scheme, y, n, t, prg);

      // [x] + [y]
      std::vector<Share> sum;
      for (u16 i = 0; i < n; ++i) sum.push_back(add_shares(xs[i], ys[i]));
      CHECK(reconstruct(sum) == add(x, y));

      // c0 + 0*x + 0*y is the constant
      std::vector<Share> consts;
      for (u16 i = 0; i < n; ++i) {
        std::vector<std::pair<Elem, Share>> terms{{zero(z11), xs[i]}, {zero(z11), ys[i]}};
        consts.push_back(local_linear(make_elem(9, z11), terms));
      }
      CHECK(reconstruct(consts).as_u64() == 9);

      // 2*[x] - [x] reconstructs to x
      std::vector<Share> twox;
      for (u16 i = 0; i < n; ++i) {
        std::vector<std::pair<Elem, Share>> terms{{make_elem(2, z11), xs[i]},
                                                  {neg(one(z11)), xs[i]}};
        twox.push_back(local_linear(zero(z11), terms));
      }
      CHECK(reconstruct(twox) == x);
    }
  }
}

TEST_CASE("unauthorized subsets look uniform") {
  Prg master(9u);
  const int trials = 3000;

  SUBCASE("additive, one of two parties, Z_5") {
    Domain z5 = Domain::prime_field(5);
    for (u64 secret : {0ull, 3ull}) {
      std::map<u64, u64> counts;
      for (int i = 0; i < trials; ++i) {
        Prg prg(u64(i) * 2 + secret);
        counts[share_additive(make_elem(secret, z5), 2, prg)[0].component(0).as_u64()]++;
      }
      CHECK(chi2_against_uniform(counts, trials, 5) < 4 + 3 * std::sqrt(8.0));
    }
  }
  SUBCASE("shamir single share, Z_7, t=2") {
    Domain z7 = Domain::prime_field(7);
    for (u64 secret : {1ull, 6ull}) {
      std::map<u64, u64> counts;
      for (int i = 0; i < trials; ++i) {
        Prg prg(u64(i) * 2 + secret + 1000);
        counts[share_shamir(make_elem(secret, z7), 3, 2, prg)[0].component(0).as_u64()]++;
      }
      CHECK(chi2_against_uniform(counts, trials, 7) < 6 + 3 * std::sqrt(12.0));
    }
  }
}

TEST_CASE("sharing is communication free") {
  MemHub hub(3, BandwidthCap::unlimited());
  Prg prg(10u);
  Domain z11 = Domain::prime_field(11);
  auto sh = share_rep3(make_elem(3, z11), prg);
  reconstruct(sh);
  auto sh2 = share_shamir(make_elem(4, z11), 3, 2, prg);
  std::vector<std::pair<Elem, Share>> terms{{one(z11), sh2[0]}};
  local_linear(zero(z11), terms);
  CHECK(hub.harvest().global_bytes() == 0);
}

TEST_CASE("share wire format") {
  Domain z61 = Domain::prime_field(kMersenne61);
  Prg prg(11u);
  auto sh = share_rep3(make_elem(123456789, z61), prg);
  auto bytes = serialize_share(sh[1]);
  // scheme tag, 2-byte party id, two 8-byte little-endian components
  REQUIRE(bytes.size() == 3 + 2 * 8);
  CHECK(bytes[0] == u8(Scheme::Rep3));
  CHECK(bytes[1] == 1);
  CHECK(bytes[2] == 0);
  CHECK(serialized_share_size(Scheme::Rep3, z61) == bytes.size());

  Share back = parse_share(bytes, z61, 3);
  CHECK(back.scheme == sh[1].scheme);
  CHECK(back.party == sh[1].party);
  CHECK(back.component(0) == sh[1].component(0));
  CHECK(back.component(1) == sh[1].component(1));

  // round-trip across all schemes and a wide ring
  Domain r168 = Domain::ring(168);
  Elem x = sample(prg, r168);
  for (auto scheme : {Scheme::Additive, Scheme::Rep3}) {
    auto shares = share_secret(scheme, x, 3, 0, prg);
    for (const auto& s : shares) {
      Share rt = parse_share(serialize_share(s), r168, 3);
      CHECK(rt.component(0) == s.component(0));
    }
  }
}
