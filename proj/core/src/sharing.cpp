#include "mpcforge/sharing.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "mpcforge/poly.hpp"

namespace mpcforge {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Additive: return "additive";
    case Scheme::Xor: return "xor";
    case Scheme::Rep3: return "rep3";
    case Scheme::Shamir: return "shamir";
    case Scheme::Rep4: return "rep4";
  }
  return "?";
}

namespace {

Share blank(Scheme s, u16 party, u16 n, const Domain& d, u8 len) {
  Share sh;
  sh.scheme = s;
  sh.party = party;
  sh.n = n;
  sh.dom = d;
  sh.payload_len = len;
  return sh;
}

unsigned payload_count(Scheme s) {
  switch (s) {
    case Scheme::Additive:
    case Scheme::Xor:
    case Scheme::Shamir: return 1;
    case Scheme::Rep3: return 2;
    case Scheme::Rep4: return 3;
  }
  return 1;
}

}  // namespace

std::vector<Share> share_additive(const Elem& x, u16 n, Prg& prg) {
  if (n < 2) fail(Errc::ParamError, "additive sharing needs n >= 2");
  std::vector<Share> out;
  out.reserve(n);
  Elem acc = zero(x.dom);
  for (u16 i = 0; i + 1 < n; ++i) {
    Elem r = sample(prg, x.dom);
    acc = add(acc, r);
    Share sh = blank(Scheme::Additive, i, n, x.dom, 1);
    sh.set_component(0, r);
    out.push_back(sh);
  }
  Share last = blank(Scheme::Additive, u16(n - 1), n, x.dom, 1);
  last.set_component(0, sub(x, acc));
  out.push_back(last);
  return out;
}

std::vector<Share> share_xor(const Elem& bit, u16 n, Prg& prg) {
  if (bit.dom.kind != DomainKind::Binary) fail(Errc::DomainMismatch, "xor sharing is for bits");
  auto shares = share_additive(bit, n, prg);
  for (auto& s : shares) s.scheme = Scheme::Xor;
  return shares;
}

std::vector<std::vector<Share>> share_xor_string(const std::vector<u8>& bits, u16 n, Prg& prg) {
  Domain d = Domain::binary();
  std::vector<std::vector<Share>> per_party(n);
  for (u8 b : bits) {
    auto sh = share_xor(make_elem(u128(b & 1), d), n, prg);
    for (u16 i = 0; i < n; ++i) per_party[i].push_back(sh[i]);
  }
  return per_party;
}

std::vector<Share> share_rep3(const Elem& x, Prg& prg) {
  Elem x0 = sample(prg, x.dom);
  Elem x1 = sample(prg, x.dom);
  Elem x2 = sub(x, add(x0, x1));
  Elem comp[3] = {x0, x1, x2};
  std::vector<Share> out;
  for (u16 i = 0; i < 3; ++i) {
    Share sh = blank(Scheme::Rep3, i, 3, x.dom, 2);
    sh.set_component(0, comp[i]);
    sh.set_component(1, comp[(i + 1) % 3]);
    out.push_back(sh);
  }
  return out;
}

std::vector<Share> share_shamir(const Elem& x, u16 n, u16 t, Prg& prg) {
  if (x.dom.kind != DomainKind::PrimeField) fail(Errc::ParamError, "shamir needs a prime field");
  if (t < 1 || t > n) fail(Errc::ParamError, "threshold out of range");
  if (U192{u128(n)} >= U192{x.dom.modulus}) fail(Errc::ParamError, "n must be below the modulus");
  std::vector<Elem> coeffs{x};
  for (u16 j = 1; j < t; ++j) coeffs.push_back(sample(prg, x.dom));
  Polynomial f = make_poly(std::move(coeffs));
  std::vector<Share> out;
  for (u16 i = 0; i < n; ++i) {
    Share sh = blank(Scheme::Shamir, i, n, x.dom, 1);
    sh.set_component(0, poly_eval(f, make_elem(u128(i) + 1, x.dom)));
    out.push_back(sh);
  }
  return out;
}

std::vector<Share> share_rep4(const Elem& x, Prg& prg) {
  Elem sum = zero(x.dom);
  Elem comp[4];
  for (int j = 1; j < 4; ++j) {
    comp[j] = sample(prg, x.dom);
    sum = add(sum, comp[j]);
  }
  comp[0] = sub(x, sum);
  std::vector<Share> out;
  for (u16 i = 0; i < 4; ++i) {
    Share sh = blank(Scheme::Rep4, i, 4, x.dom, 3);
    unsigned c = 0;
    for (unsigned j = 0; j < 4; ++j) {
      if (j == i || c >= 3) continue;
      sh.set_component(c++, comp[j]);
    }
    out.push_back(sh);
  }
  return out;
}

std::vector<Share> share_secret(Scheme s, const Elem& x, u16 n, u16 t, Prg& prg) {
  switch (s) {
    case Scheme::Additive: return share_additive(x, n, prg);
    case Scheme::Xor: return share_xor(x, n, prg);
    case Scheme::Rep3: return share_rep3(x, prg);
    case Scheme::Shamir: return share_shamir(x, n, t, prg);
    case Scheme::Rep4: return share_rep4(x, prg);
  }
  fail(Errc::ParamError, "unknown scheme");
}

Elem reconstruct(std::span<const Share> shares) {
  if (shares.empty()) fail(Errc::InsufficientShares, "no shares");
  const Share& first = shares.front();
  for (const auto& s : shares) {
    if (s.scheme != first.scheme) fail(Errc::SchemeMismatch, "mixed schemes");
    if (!(s.dom == first.dom)) fail(Errc::DomainMismatch, "mixed domains");
  }

  switch (first.scheme) {
    case Scheme::Additive:
    case Scheme::Xor: {
      std::vector<bool> seen(first.n, false);
      Elem acc = zero(first.dom);
      for (const auto& s : shares) {
        if (s.party >= first.n || seen[s.party]) continue;
        seen[s.party] = true;
        acc = add(acc, s.component(0));
      }
      if (std::count(seen.begin(), seen.end(), true) != first.n)
        fail(Errc::InsufficientShares, "additive reconstruction needs every party");
      return acc;
    }
    case Scheme::Rep3: {
      std::optional<Elem> comp[3];
      auto place = [&](unsigned idx, const Elem& e) {
        if (comp[idx] && !(*comp[idx] == e))
          fail(Errc::InconsistentReplicas, "replicated copies disagree");
        comp[idx] = e;
      };
      for (const auto& s : shares) {
        place(s.party % 3, s.component(0));
        place((s.party + 1) % 3, s.component(1));
      }
      if (!comp[0] || !comp[1] || !comp[2])
        fail(Errc::InsufficientShares, "rep3 needs two distinct parties");
      return add(add(*comp[0], *comp[1]), *comp[2]);
    }
    case Scheme::Rep4: {
      std::optional<Elem> comp[4];
      for (const auto& s : shares) {
        unsigned c = 0;
        for (unsigned j = 0; j < 4; ++j) {
          if (j == s.party % 4) continue;
          Elem e = s.component(c++);
          if (comp[j] && !(*comp[j] == e))
            fail(Errc::InconsistentReplicas, "replicated copies disagree");
          comp[j] = e;
        }
      }
      Elem acc = zero(first.dom);
      for (unsigned j = 0; j < 4; ++j) {
        if (!comp[j]) fail(Errc::InsufficientShares, "rep4 summand missing");
        acc = add(acc, *comp[j]);
      }
      return acc;
    }
    case Scheme::Shamir: {
      std::vector<std::pair<Elem, Elem>> pts;
      std::vector<bool> used(first.n, false);
      for (const auto& s : shares) {
        if (s.party >= first.n || used[s.party]) continue;
        used[s.party] = true;
        pts.emplace_back(s.shamir_z(), s.component(0));
      }
      Polynomial f = poly_interpolate(pts);
      return poly_eval(f, zero(first.dom));
    }
  }
  fail(Errc::ParamError, "unknown scheme");
}

Share share_of_public(const Elem& c, Scheme s, u16 party, u16 n) {
  Share sh = blank(s, party, n, c.dom, u8(payload_count(s)));
  switch (s) {
    case Scheme::Additive:
    case Scheme::Xor:
      sh.set_component(0, party == 0 ? c : zero(c.dom));
      break;
    case Scheme::Rep3:
      // Component convention: x_0 = c, x_1 = x_2 = 0.
      sh.set_component(0, party == 0 ? c : zero(c.dom));
      sh.set_component(1, party == 2 ? c : zero(c.dom));
      break;
    case Scheme::Shamir: sh.set_component(0, c); break;
    case Scheme::Rep4: {
      // Summand x_0 = c, rest zero; party 0 does not hold x_0.
      unsigned idx = 0;
      for (unsigned j = 0; j < 4; ++j) {
        if (j == party % 4 || idx >= 3) continue;
        sh.set_component(idx++, j == 0 ? c : zero(c.dom));
      }
      break;
    }
  }
  return sh;
}

namespace {
void check_linear_compat(const Share& a, const Share& b) {
  if (a.scheme != b.scheme || a.party != b.party || a.n != b.n)
    fail(Errc::SchemeMismatch, "shares not from the same sharing context");
  if (!(a.dom == b.dom)) fail(Errc::DomainMismatch, "mixed domains");
}
}  // namespace

Share add_shares(const Share& a, const Share& b) {
  check_linear_compat(a, b);
  Share out = a;
  for (unsigned i = 0; i < a.size(); ++i)
    out.set_component(i, add(a.component(i), b.component(i)));
  return out;
}

Share sub_shares(const Share& a, const Share& b) {
  check_linear_compat(a, b);
  Share out = a;
  for (unsigned i = 0; i < a.size(); ++i)
    out.set_component(i, sub(a.component(i), b.component(i)));
  return out;
}

Share scale_share(const Elem& c, const Share& a) {
  if (!(c.dom == a.dom)) fail(Errc::DomainMismatch, "coefficient domain");
  Share out = a;
  for (unsigned i = 0; i < a.size(); ++i) out.set_component(i, mul(c, a.component(i)));
  return out;
}

Share neg_share(const Share& a) {
  Share out = a;
  for (unsigned i = 0; i < a.size(); ++i) out.set_component(i, neg(a.component(i)));
  return out;
}

Share local_linear(const Elem& c0, std::span<const std::pair<Elem, Share>> terms) {
  if (terms.empty()) fail(Errc::ParamError, "local_linear needs at least one share for context");
  Share acc = share_of_public(c0, terms.front().second.scheme, terms.front().second.party,
                              terms.front().second.n);
  for (const auto& [coeff, sh] : terms) acc = add_shares(acc, scale_share(coeff, sh));
  return acc;
}

void append_elem(std::vector<u8>& out, const Elem& e) {
  unsigned nbytes = e.dom.byte_length();
  for (unsigned i = 0; i < nbytes; ++i) {
    unsigned bit = i * 8;
    u8 byte = bit < 128 ? u8(e.v.lo >> bit) : u8(e.v.hi >> (bit - 128));
    // Bytes straddling the 128-bit boundary need both halves.
    if (bit < 128 && bit + 8 > 128) byte = u8(e.v.lo >> bit) | u8(e.v.hi << (128 - bit));
    out.push_back(byte);
  }
}

Elem read_elem(std::span<const u8> in, std::size_t& off, const Domain& dom) {
  unsigned nbytes = dom.byte_length();
  if (off + nbytes > in.size()) fail(Errc::IoError, "truncated element");
  U192 v;
  for (unsigned i = 0; i < nbytes; ++i) {
    u8 byte = in[off + i];
    unsigned bit = i * 8;
    if (bit < 128) v.lo |= u128(byte) << bit;
    if (bit + 8 > 128) {
      unsigned hb = bit >= 128 ? bit - 128 : 0;
      unsigned drop = bit >= 128 ? 0 : 128 - bit;
      v.hi |= u64(byte >> drop) << hb;
    }
  }
  off += nbytes;
  return make_elem(v, dom);
}

std::size_t serialized_share_size(Scheme s, const Domain& dom) {
  return 3 + payload_count(s) * dom.byte_length();
}

std::vector<u8> serialize_share(const Share& s) {
  std::vector<u8> out;
  out.push_back(u8(s.scheme));
  out.push_back(u8(s.party & 0xff));
  out.push_back(u8(s.party >> 8));
  for (unsigned i = 0; i < s.size(); ++i) append_elem(out, s.component(i));
  return out;
}

Share parse_share(std::span<const u8> bytes, const Domain& dom, u16 n) {
  if (bytes.size() < 3) fail(Errc::IoError, "truncated share");
  Scheme scheme = Scheme(bytes[0]);
  u16 party = u16(bytes[1]) | (u16(bytes[2]) << 8);
  Share sh = blank(scheme, party, n, dom, u8(payload_count(scheme)));
  std::size_t off = 3;
  for (unsigned i = 0; i < sh.size(); ++i)
    sh.set_component(i, read_elem(bytes, off, dom));
  return sh;
}

}  // namespace mpcforge
