#ifndef MPCFORGE_SHARING_HPP
#define MPCFORGE_SHARING_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mpcforge/domain.hpp"
#include "mpcforge/prg.hpp"

namespace mpcforge {

enum class Scheme : u8 { Additive, Xor, Rep3, Shamir, Rep4 };

const char* scheme_name(Scheme s);

// One party's piece of a secret.
//
// Payload layout by scheme (component values live in `dom`):
//   Additive / Xor : [own summand]
//   Rep3           : [x_i, x_{i+1 mod 3}] where x = x_0 + x_1 + x_2
//   Shamir         : [f(z_i)] with the evaluation point fixed to z_i = i+1
//   Rep4           : [x_j : j != i, ascending j] where x = x_0 + .. + x_3
//
// Rep3 matches the replicated scheme built from three values v_i and
// a_i = v_((i-1) mod 3) - x: with v_i := x_i the pair (v_i, a_i) is exactly
// (payload[0], -(payload[0] + payload[1])). rep3_v()/rep3_a() expose that view.
struct Share {
  Scheme scheme = Scheme::Additive;
  u16 party = 0;
  u16 n = 0;  // number of parties in the sharing
  Domain dom;
  std::array<U192, 3> payload{};
  u8 payload_len = 0;

  unsigned size() const { return payload_len <= 3 ? payload_len : 3; }
  Elem component(unsigned i) const { return Elem(payload[i], dom); }
  void set_component(unsigned i, const Elem& e) { payload[i] = e.v; }

  Elem rep3_v() const { return component(0); }
  Elem rep3_a() const { return neg(add(component(0), component(1))); }

  // Shamir evaluation point.
  Elem shamir_z() const { return make_elem(u128(party) + 1, dom); }
};

// Dealer-side sharing. Every function returns one Share per party.
std::vector<Share> share_additive(const Elem& x, u16 n, Prg& prg);
std::vector<Share> share_xor(const Elem& bit, u16 n, Prg& prg);
std::vector<Share> share_rep3(const Elem& x, Prg& prg);
std::vector<Share> share_shamir(const Elem& x, u16 n, u16 t, Prg& prg);
std::vector<Share> share_rep4(const Elem& x, Prg& prg);

// Dispatch on scheme; Shamir uses quorum t, others ignore it.
std::vector<Share> share_secret(Scheme s, const Elem& x, u16 n, u16 t, Prg& prg);

// XOR-share a bit string; result is party-major, one Share per bit.
std::vector<std::vector<Share>> share_xor_string(const std::vector<u8>& bits, u16 n, Prg& prg);

// Recover the secret. Replicated schemes cross-check every overlapping copy
// and raise InconsistentReplicas on disagreement; additive schemes require all
// n parties, Rep3 any 2, Rep4 any 2, Shamir at least the quorum used when
// sharing (interpolates through everything supplied).
Elem reconstruct(std::span<const Share> shares);

// A sharing of a public constant every party can form locally.
Share share_of_public(const Elem& c, Scheme s, u16 party, u16 n);

// result = c0 + sum coeff_j * share_j, computed locally by each party.
Share local_linear(const Elem& c0, std::span<const std::pair<Elem, Share>> terms);

// Share-level linear helpers (same scheme/party/domain required).
Share add_shares(const Share& a, const Share& b);
Share sub_shares(const Share& a, const Share& b);
Share scale_share(const Elem& c, const Share& a);
Share neg_share(const Share& a);

// Wire format: scheme tag (1 byte), party id (2 bytes LE), payload components
// as fixed-width little-endian limbs sized by the domain.
std::vector<u8> serialize_share(const Share& s);
Share parse_share(std::span<const u8> bytes, const Domain& dom, u16 n);
std::size_t serialized_share_size(Scheme s, const Domain& dom);

// Element wire helpers shared with the transport layer.
void append_elem(std::vector<u8>& out, const Elem& e);
Elem read_elem(std::span<const u8> in, std::size_t& off, const Domain& dom);

}  // namespace mpcforge

#endif
