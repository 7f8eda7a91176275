#ifndef MPCFORGE_AUTH_HPP
#define MPCFORGE_AUTH_HPP

#include <optional>
#include <span>
#include <vector>

#include "mpcforge/sharing.hpp"

namespace mpcforge {

// Share of the global MAC key alpha. For prime fields alpha lives in the field
// itself; for rings Z_2^k everything MAC-related is lifted to Z_2^(k+s) and
// alpha is uniform over the extended ring.
struct MacKeyShare {
  Share alpha;
  Domain domain() const { return alpha.dom; }
};

// Additively shared value with its MAC tag share (m = alpha * x).
struct AuthShare {
  Share value;
  Share mac;
};

// Domain MAC arithmetic happens in: the field itself, or Z_2^(k+s).
Domain mac_domain_for(const Domain& value_domain);

// Trusted-dealer key sampling (key generation protocols are out of scope).
std::vector<MacKeyShare> gen_mac_key(const Domain& value_domain, u16 n, Prg& dealer);
Elem mac_key_value(std::span<const MacKeyShare> keys);

// Dealer-side authentication of an additively shared value; the dealer holds
// the key, so this is only used for correlated randomness it created anyway.
std::vector<AuthShare> authenticate(std::span<const Share> x_shares,
                                    std::span<const MacKeyShare> keys, Prg& dealer);

// Linear algebra on authenticated shares. Adding a public constant w shifts
// the MAC by alpha*w, which each party applies with its own key share.
AuthShare auth_add(const AuthShare& a, const AuthShare& b);
AuthShare auth_sub(const AuthShare& a, const AuthShare& b);
AuthShare auth_scale(const Elem& c, const AuthShare& a);
AuthShare auth_neg(const AuthShare& a);
AuthShare auth_add_public(const AuthShare& a, const Elem& w, const MacKeyShare& key);

// One opened value as the checker sees it: the public value plus every
// party's MAC share. (value is the representative in the MAC domain.)
struct OpenedValue {
  Elem value;
  std::vector<Elem> mac_shares;
};

// Aggregate acceptance decisions; Abort on failure. These operate on the
// gathered view; the engine collects the d_i = m_i - alpha_i * x over the
// network and feeds them here.
void mac_check_field(std::span<const OpenedValue> opened, std::span<const MacKeyShare> keys);
void mac_check_ring(std::span<const OpenedValue> opened, std::span<const MacKeyShare> keys,
                    unsigned k, unsigned s);
// Single random-linear-combination check amortizing many openings.
void mac_check_batch(std::span<const OpenedValue> opened, std::span<const MacKeyShare> keys,
                     Prg& joint);

// Party-local contribution to a batch check: d_i = sum_j chi_j * m_ij -
// alpha_i * sum_j chi_j * x_j. The check accepts iff the d_i sum to zero.
Elem mac_check_local(std::span<const Elem> opened_values, std::span<const Elem> mac_shares,
                     const MacKeyShare& key, Prg& joint);

}  // namespace mpcforge

#endif
