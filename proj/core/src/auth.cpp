#include "mpcforge/auth.hpp"

namespace mpcforge {

Domain mac_domain_for(const Domain& value_domain) {
  switch (value_domain.kind) {
    case DomainKind::PrimeField: return value_domain;
    case DomainKind::Ring: return value_domain.extended(value_domain.s);
    case DomainKind::Binary: fail(Errc::ParamError, "no MAC construction for the binary domain");
  }
  fail(Errc::ParamError, "bad domain");
}

std::vector<MacKeyShare> gen_mac_key(const Domain& value_domain, u16 n, Prg& dealer) {
  Domain md = mac_domain_for(value_domain);
  Elem alpha = sample(dealer, md);
  auto shares = share_additive(alpha, n, dealer);
  std::vector<MacKeyShare> out;
  out.reserve(n);
  for (auto& s : shares) out.push_back(MacKeyShare{s});
  return out;
}

Elem mac_key_value(std::span<const MacKeyShare> keys) {
  std::vector<Share> shares;
  shares.reserve(keys.size());
  for (const auto& k : keys) shares.push_back(k.alpha);
  return reconstruct(shares);
}

std::vector<AuthShare> authenticate(std::span<const Share> x_shares,
                                    std::span<const MacKeyShare> keys, Prg& dealer) {
  if (x_shares.size() != keys.size()) fail(Errc::ParamError, "share/key count mismatch");
  Domain md = keys.front().domain();
  for (const auto& s : x_shares) {
    if (s.scheme != Scheme::Additive && s.scheme != Scheme::Xor)
      fail(Errc::SchemeMismatch, "MACs require additive sharing");
    if (!(s.dom == md)) fail(Errc::DomainMismatch, "value not carried in the MAC domain");
  }
  std::vector<Share> xs(x_shares.begin(), x_shares.end());
  Elem x = reconstruct(xs);
  Elem m = mul(mac_key_value(keys), x);
  auto mac_shares = share_additive(m, u16(keys.size()), dealer);
  std::vector<AuthShare> out;
  out.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) out.push_back(AuthShare{xs[i], mac_shares[i]});
  return out;
}

AuthShare auth_add(const AuthShare& a, const AuthShare& b) {
  return AuthShare{add_shares(a.value, b.value), add_shares(a.mac, b.mac)};
}

AuthShare auth_sub(const AuthShare& a, const AuthShare& b) {
  return AuthShare{sub_shares(a.value, b.value), sub_shares(a.mac, b.mac)};
}

AuthShare auth_scale(const Elem& c, const AuthShare& a) {
  return AuthShare{scale_share(c, a.value), scale_share(c, a.mac)};
}

AuthShare auth_neg(const AuthShare& a) { return AuthShare{neg_share(a.value), neg_share(a.mac)}; }

AuthShare auth_add_public(const AuthShare& a, const Elem& w, const MacKeyShare& key) {
  Share value = a.value;
  if (value.party == 0) value.set_component(0, add(value.component(0), w));
  Share mac = a.mac;
  mac.set_component(0, add(mac.component(0), mul(key.alpha.component(0), w)));
  return AuthShare{value, mac};
}

namespace {

// Accepts iff sum_i m_i - alpha * x == 0 in the MAC domain.
bool relation_holds(const OpenedValue& ov, const Elem& alpha) {
  Elem m_total = zero(ov.value.dom);
  for (const auto& m : ov.mac_shares) m_total = add(m_total, m);
  return sub(m_total, mul(alpha, ov.value)).is_zero();
}

}  // namespace

void mac_check_field(std::span<const OpenedValue> opened, std::span<const MacKeyShare> keys) {
  Elem alpha = mac_key_value(keys);
  if (alpha.dom.kind != DomainKind::PrimeField) fail(Errc::ParamError, "field check on non-field");
  for (const auto& ov : opened)
    if (!relation_holds(ov, alpha)) fail(Errc::Abort, "MAC check failed (field)");
}

void mac_check_ring(std::span<const OpenedValue> opened, std::span<const MacKeyShare> keys,
                    unsigned k, unsigned s) {
  Elem alpha = mac_key_value(keys);
  if (alpha.dom.kind != DomainKind::Ring || alpha.dom.k != k + s)
    fail(Errc::ParamError, "ring check domain mismatch");
  for (const auto& ov : opened)
    if (!relation_holds(ov, alpha)) fail(Errc::Abort, "MAC check failed (ring)");
}

void mac_check_batch(std::span<const OpenedValue> opened, std::span<const MacKeyShare> keys,
                     Prg& joint) {
  if (opened.empty()) return;  // vacuous accept
  Domain md = keys.front().domain();
  Elem x_comb = zero(md);
  std::vector<Elem> m_comb(keys.size(), zero(md));
  for (const auto& ov : opened) {
    Elem chi = sample(joint, md);
    x_comb = add(x_comb, mul(chi, ov.value));
    for (std::size_t i = 0; i < keys.size(); ++i)
      m_comb[i] = add(m_comb[i], mul(chi, ov.mac_shares[i]));
  }
  Elem alpha = mac_key_value(keys);
  Elem m_total = zero(md);
  for (const auto& m : m_comb) m_total = add(m_total, m);
  if (!sub(m_total, mul(alpha, x_comb)).is_zero()) fail(Errc::Abort, "batch MAC check failed");
}

Elem mac_check_local(std::span<const Elem> opened_values, std::span<const Elem> mac_shares,
                     const MacKeyShare& key, Prg& joint) {
  Domain md = key.domain();
  Elem x_comb = zero(md);
  Elem m_comb = zero(md);
  for (std::size_t j = 0; j < opened_values.size(); ++j) {
    Elem chi = sample(joint, md);
    x_comb = add(x_comb, mul(chi, opened_values[j]));
    m_comb = add(m_comb, mul(chi, mac_shares[j]));
  }
  return sub(m_comb, mul(key.alpha.component(0), x_comb));
}

}  // namespace mpcforge
