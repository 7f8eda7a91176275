#include "mpcforge/prep.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <map>

#include "mpcforge/digest.hpp"
#include "mpcforge/poly.hpp"

namespace mpcforge {
namespace prep {

namespace {

enum class Op : u8 {
  Triples = 1,
  BinTriples = 2,
  Dabits = 3,
  Edabits = 4,
  ArithBits = 5,
  Randoms = 6,
  MacKey = 7,
};

std::vector<u8> encode_request(Op op, u64 count, u32 extra) {
  std::vector<u8> r(13);
  r[0] = u8(op);
  for (int i = 0; i < 8; ++i) r[1 + i] = u8(count >> (8 * i));
  for (int i = 0; i < 4; ++i) r[9 + i] = u8(extra >> (8 * i));
  return r;
}

void decode_request(std::span<const u8> r, Op& op, u64& count, u32& extra) {
  if (r.size() != 13) fail(Errc::TransportFailure, "bad prep request");
  op = Op(r[0]);
  count = 0;
  extra = 0;
  for (int i = 0; i < 8; ++i) count |= u64(r[1 + i]) << (8 * i);
  for (int i = 0; i < 4; ++i) extra |= u32(r[9 + i]) << (8 * i);
}

DealerContext arith_context(const ProtocolConfig& cfg, Prg& dealer_prg,
                            std::vector<MacKeyShare>* keys_out) {
  DealerContext ctx;
  ctx.scheme = cfg.scheme();
  ctx.n = cfg.n_parties;
  ctx.quorum = u16(cfg.threshold + 1);
  ctx.dom = cfg.share_domain();
  if (cfg.authenticated()) {
    Prg key_prg = dealer_prg.fork("mac-key");
    ctx.keys = gen_mac_key(cfg.domain, cfg.n_parties, key_prg);
  }
  if (keys_out) *keys_out = ctx.keys;
  return ctx;
}

std::vector<SVal> make_sval_shares(const DealerContext& ctx, const Elem& x, Prg& prg) {
  auto shares = share_secret(ctx.scheme, x, ctx.n, ctx.quorum, prg);
  std::vector<SVal> out(ctx.n);
  if (!ctx.keys.empty()) {
    auto auth = authenticate(shares, ctx.keys, prg);
    for (u16 p = 0; p < ctx.n; ++p) out[p] = SVal{auth[p].value, auth[p].mac};
  } else {
    for (u16 p = 0; p < ctx.n; ++p) out[p] = SVal{shares[p], std::nullopt};
  }
  return out;
}

void append_sval(std::vector<u8>& out, const SVal& v) {
  for (unsigned c = 0; c < v.value.size(); ++c) append_elem(out, v.value.component(c));
  if (v.mac) append_elem(out, v.mac->component(0));
}

SVal read_sval(std::span<const u8> in, std::size_t& off, Scheme scheme, u16 party, u16 n,
               const Domain& dom, bool has_mac) {
  Share sh = share_of_public(zero(dom), scheme, party, n);
  for (unsigned c = 0; c < sh.size(); ++c) sh.set_component(c, read_elem(in, off, dom));
  SVal v{sh, std::nullopt};
  if (has_mac) {
    Share mac = share_of_public(zero(dom), Scheme::Additive, party, n);
    mac.set_component(0, read_elem(in, off, dom));
    v.mac = mac;
  }
  return v;
}

void append_bin_share(std::vector<u8>& out, const Share& sh) {
  for (unsigned c = 0; c < sh.size(); ++c) append_elem(out, sh.component(c));
}

Share read_bin_share(std::span<const u8> in, std::size_t& off, Scheme scheme, u16 party, u16 n) {
  Domain b = Domain::binary();
  Share sh = share_of_public(zero(b), scheme, party, n);
  for (unsigned c = 0; c < sh.size(); ++c) sh.set_component(c, read_elem(in, off, b));
  return sh;
}

SVal public_like(Session& s, const SVal& proto, const Elem& c) {
  SVal v;
  v.value = share_of_public(c, proto.value.scheme, s.party(), proto.value.n);
  if (proto.mac) {
    Share mac = share_of_public(zero(c.dom), Scheme::Additive, s.party(), proto.value.n);
    mac.set_component(0, mul(s.mac_key().front().alpha.component(0), c));
    v.mac = mac;
  }
  return v;
}

Elem sample_nonzero(Prg& prg, const Domain& d) {
  for (;;) {
    Elem e = sample(prg, d);
    if (!e.is_zero()) return e;
  }
}

struct LogSuppress {
  explicit LogSuppress(Session& s) : s_(s), prev_(s.suppress_mult_log) {
    s_.suppress_mult_log = true;
  }
  ~LogSuppress() { s_.suppress_mult_log = prev_; }
  Session& s_;
  bool prev_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Dealer-side generation
// ---------------------------------------------------------------------------

std::vector<std::vector<Triple>> dealer_make_triples(const DealerContext& ctx, u64 count,
                                                     Prg& prg) {
  std::vector<std::vector<Triple>> out(ctx.n);
  for (u64 i = 0; i < count; ++i) {
    Elem a = sample(prg, ctx.dom);
    Elem b = sample(prg, ctx.dom);
    Elem c = mul(a, b);
    auto as = make_sval_shares(ctx, a, prg);
    auto bs = make_sval_shares(ctx, b, prg);
    auto cs = make_sval_shares(ctx, c, prg);
    for (u16 p = 0; p < ctx.n; ++p) out[p].push_back(Triple{as[p], bs[p], cs[p]});
  }
  return out;
}

std::vector<std::vector<DaBit>> dealer_make_dabits(const DealerContext& arith, Scheme bin_scheme,
                                                   u16 bin_n, u64 count, Prg& prg) {
  Domain b = Domain::binary();
  std::vector<std::vector<DaBit>> out(arith.n);
  for (u64 i = 0; i < count; ++i) {
    u8 r = prg.next_u8() & 1;
    auto as = make_sval_shares(arith, make_elem(u128(r), arith.dom), prg);
    auto bs = share_secret(bin_scheme, make_elem(u128(r), b), bin_n, 0, prg);
    for (u16 p = 0; p < arith.n; ++p) out[p].push_back(DaBit{as[p], bs[p]});
  }
  return out;
}

std::vector<std::vector<EdaBit>> dealer_make_edabits(const DealerContext& arith, Scheme bin_scheme,
                                                     u16 bin_n, u64 count, unsigned m, Prg& prg) {
  Domain b = Domain::binary();
  if (m == 0 || m > arith.dom.bit_length()) fail(Errc::ParamError, "edabit width out of range");
  std::vector<std::vector<EdaBit>> out(arith.n);
  for (u64 i = 0; i < count; ++i) {
    // r uniform below min(2^m, modulus) so the bits recompose exactly.
    Elem r = [&] {
      for (;;) {
        U192 raw = prg.next_bits(m);
        if (arith.dom.kind == DomainKind::PrimeField && !(raw < U192{arith.dom.modulus})) continue;
        return Elem(raw, arith.dom);
      }
    }();
    auto as = make_sval_shares(arith, r, prg);
    std::vector<std::vector<Share>> bit_shares(arith.n);
    for (unsigned j = 0; j < m; ++j) {
      Elem bit = make_elem(u128(bit_at(r.v, j) ? 1 : 0), b);
      auto bs = share_secret(bin_scheme, bit, bin_n, 0, prg);
      for (u16 p = 0; p < arith.n; ++p) bit_shares[p].push_back(bs[p]);
    }
    for (u16 p = 0; p < arith.n; ++p) out[p].push_back(EdaBit{as[p], bit_shares[p]});
  }
  return out;
}

std::vector<std::vector<SVal>> dealer_make_bit_svals(const DealerContext& ctx, u64 count,
                                                     Prg& prg) {
  std::vector<std::vector<SVal>> out(ctx.n);
  for (u64 i = 0; i < count; ++i) {
    u8 r = prg.next_u8() & 1;
    auto shares = make_sval_shares(ctx, make_elem(u128(r), ctx.dom), prg);
    for (u16 p = 0; p < ctx.n; ++p) out[p].push_back(shares[p]);
  }
  return out;
}

std::vector<std::vector<SVal>> dealer_make_randoms(const DealerContext& ctx, u64 count, Prg& prg) {
  std::vector<std::vector<SVal>> out(ctx.n);
  for (u64 i = 0; i < count; ++i) {
    auto shares = make_sval_shares(ctx, sample(prg, ctx.dom), prg);
    for (u16 p = 0; p < ctx.n; ++p) out[p].push_back(shares[p]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dealer endpoint loop
// ---------------------------------------------------------------------------

void dealer_main_loop(const ProtocolConfig& cfg, Net& net, u64 run_seed) {
  Prg prg = Prg(run_seed).fork("dealer");
  std::vector<MacKeyShare> keys;
  DealerContext arith = arith_context(cfg, prg, &keys);
  const u16 n = cfg.n_parties;
  const Scheme bin_scheme = cfg.binary_scheme();
  const u16 bin_n = bin_scheme == Scheme::Rep4 ? 4 : n;
  DealerContext bin_ctx{bin_scheme == Scheme::Rep4 ? Scheme::Rep4 : Scheme::Xor, bin_n, 1,
                        Domain::binary(), {}};
  auto deadline = deadline_in(cfg.timeout_s + 10.0);

  for (;;) {
    // One identical request from every party.
    std::vector<u8> first;
    bool shutdown = false;
    for (u16 p = 0; p < n; ++p) {
      Frame f = net.from(p).recv(deadline);
      if (f.type == msg::kShutdown) {
        shutdown = true;
        continue;
      }
      if (f.type != msg::kPrepRequest) fail(Errc::TransportFailure, "unexpected dealer frame");
      if (p == 0 || first.empty()) {
        first = f.payload;
      } else if (f.payload != first) {
        fail(Errc::TransportFailure, "parties disagree on preprocessing request");
      }
    }
    if (shutdown) return;

    Op op;
    u64 count;
    u32 extra;
    decode_request(first, op, count, extra);
    std::vector<std::vector<u8>> payloads(n);

    switch (op) {
      case Op::Triples: {
        auto ts = dealer_make_triples(arith, count, prg);
        for (u16 p = 0; p < n; ++p)
          for (const auto& t : ts[p]) {
            append_sval(payloads[p], t.a);
            append_sval(payloads[p], t.b);
            append_sval(payloads[p], t.c);
          }
        break;
      }
      case Op::BinTriples: {
        auto ts = dealer_make_triples(bin_ctx, count, prg);
        for (u16 p = 0; p < n; ++p)
          for (const auto& t : ts[p]) {
            append_sval(payloads[p], t.a);
            append_sval(payloads[p], t.b);
            append_sval(payloads[p], t.c);
          }
        break;
      }
      case Op::Dabits: {
        auto ds = dealer_make_dabits(arith, bin_scheme, bin_n, count, prg);
        for (u16 p = 0; p < n; ++p)
          for (const auto& d : ds[p]) {
            append_sval(payloads[p], d.arith);
            append_bin_share(payloads[p], d.bin);
          }
        break;
      }
      case Op::Edabits: {
        auto es = dealer_make_edabits(arith, bin_scheme, bin_n, count, extra, prg);
        for (u16 p = 0; p < n; ++p)
          for (const auto& e : es[p]) {
            append_sval(payloads[p], e.arith);
            for (const auto& bit : e.bits) append_bin_share(payloads[p], bit);
          }
        break;
      }
      case Op::ArithBits: {
        auto bs = dealer_make_bit_svals(arith, count, prg);
        for (u16 p = 0; p < n; ++p)
          for (const auto& v : bs[p]) append_sval(payloads[p], v);
        break;
      }
      case Op::Randoms: {
        auto rs = dealer_make_randoms(arith, count, prg);
        for (u16 p = 0; p < n; ++p)
          for (const auto& v : rs[p]) append_sval(payloads[p], v);
        break;
      }
      case Op::MacKey: {
        if (keys.empty()) fail(Errc::TransportFailure, "no MAC key configured");
        for (u16 p = 0; p < n; ++p) append_elem(payloads[p], keys[p].alpha.component(0));
        break;
      }
    }
    for (u16 p = 0; p < n; ++p) net.send(p, msg::kPrepData, payloads[p]);
  }
}

// ---------------------------------------------------------------------------
// Party-side fetch helpers
// ---------------------------------------------------------------------------

namespace {

std::vector<u8> roundtrip(Session& s, Op op, u64 count, u32 extra) {
  s.dealer_request(encode_request(op, count, extra));
  return s.dealer_response();
}

std::vector<Triple> fetch_triples(Session& s, u64 count, bool binary) {
  const auto& cfg = s.cfg();
  Scheme scheme = binary ? (cfg.binary_scheme() == Scheme::Rep4 ? Scheme::Rep4 : Scheme::Xor)
                         : cfg.scheme();
  Domain dom = binary ? Domain::binary() : s.share_dom();
  bool mac = binary ? false : cfg.authenticated();
  u16 n = (scheme == Scheme::Rep4) ? 4 : cfg.n_parties;
  auto bytes = roundtrip(s, binary ? Op::BinTriples : Op::Triples, count, 0);
  std::vector<Triple> out;
  out.reserve(count);
  std::size_t off = 0;
  for (u64 i = 0; i < count; ++i) {
    Triple t;
    t.a = read_sval(bytes, off, scheme, s.party(), n, dom, mac);
    t.b = read_sval(bytes, off, scheme, s.party(), n, dom, mac);
    t.c = read_sval(bytes, off, scheme, s.party(), n, dom, mac);
    out.push_back(t);
  }
  if (off != bytes.size()) fail(Errc::TransportFailure, "triple payload mismatch");
  return out;
}

}  // namespace

void fetch_mac_key(Session& s, std::vector<MacKeyShare>& out) {
  auto bytes = roundtrip(s, Op::MacKey, 1, 0);
  std::size_t off = 0;
  Domain md = mac_domain_for(s.cfg().domain);
  Share alpha = share_of_public(zero(md), Scheme::Additive, s.party(), s.n());
  alpha.set_component(0, read_elem(bytes, off, md));
  out.clear();
  out.push_back(MacKeyShare{alpha});
}

void fetch_randoms(Session& s, u64 count, std::vector<SVal>& out) {
  auto bytes = roundtrip(s, Op::Randoms, count, 0);
  std::size_t off = 0;
  for (u64 i = 0; i < count; ++i)
    out.push_back(read_sval(bytes, off, s.cfg().scheme(), s.party(), s.n(), s.share_dom(),
                            s.cfg().authenticated()));
}

// ---------------------------------------------------------------------------
// OT-based triples
// ---------------------------------------------------------------------------

std::vector<Triple> gen_triples_ot(Session& s, u64 count, const Domain& dom, Scheme scheme) {
  if (scheme != Scheme::Additive && scheme != Scheme::Xor)
    fail(Errc::SchemeMismatch, "OT triple generation runs over additive sharing");
  if (s.n() < 2) fail(Errc::ParamError, "need at least two parties");
  const u16 n = s.n();
  const u16 me = s.party();
  const unsigned tau = dom.bit_length();
  Prg& prg = s.private_prg();

  std::vector<Elem> a(count, zero(dom)), b(count, zero(dom));
  std::vector<std::vector<u8>> a_bits(count);
  for (u64 t = 0; t < count; ++t) {
    a[t] = sample(prg, dom);
    b[t] = sample(prg, dom);
    a_bits[t] = bit_decompose_plain(a[t], tau);
  }

  // Powers of two reduced into the domain.
  std::vector<Elem> pow2(tau, zero(dom));
  for (unsigned h = 0; h < tau; ++h) pow2[h] = make_elem(pow2_192(h), dom);

  // As OT sender towards peer j: random messages (q0,q1) per (triple, bit)
  // plus the correction d = q0 - q1 + b. The ideal OT ships both messages in
  // one frame; the receiver's view below only ever uses the chosen one and
  // the choice bits never leave the receiver.
  std::vector<std::vector<Elem>> q0(n), q1(n);
  for (u16 j = 0; j < n; ++j) {
    if (j == me) continue;
    q0[j].reserve(count * tau);
    q1[j].reserve(count * tau);
    std::vector<Elem> ot_payload;
    std::vector<Elem> corrections;
    ot_payload.reserve(2 * count * tau);
    corrections.reserve(count * tau);
    for (u64 t = 0; t < count; ++t) {
      for (unsigned h = 0; h < tau; ++h) {
        Elem m0 = sample(prg, dom);
        Elem m1 = sample(prg, dom);
        q0[j].push_back(m0);
        q1[j].push_back(m1);
        ot_payload.push_back(m0);
        ot_payload.push_back(m1);
        corrections.push_back(add(sub(m0, m1), b[t]));
      }
    }
    std::vector<u8> buf;
    for (const auto& e : ot_payload) append_elem(buf, e);
    s.net().send(j, msg::kOt, buf);
    buf.clear();
    for (const auto& e : corrections) append_elem(buf, e);
    s.net().send(j, msg::kOtCorrection, buf);
  }

  // As OT receiver from peer i: keep q_choice with choice bits from a.
  std::vector<Elem> cross(count, zero(dom));  // sum of c^(i,me) and c^(me,i) contributions
  for (u16 i = 0; i < n; ++i) {
    if (i == me) continue;
    auto ot_bytes = s.net().recv(i, msg::kOt, s.deadline());
    auto corr_bytes = s.net().recv(i, msg::kOtCorrection, s.deadline());
    std::size_t off_ot = 0, off_c = 0;
    for (u64 t = 0; t < count; ++t) {
      Elem acc = zero(dom);
      for (unsigned h = 0; h < tau; ++h) {
        Elem m0 = read_elem(ot_bytes, off_ot, dom);
        Elem m1 = read_elem(ot_bytes, off_ot, dom);
        Elem d = read_elem(corr_bytes, off_c, dom);
        bool choice = a_bits[t][h] != 0;
        Elem got = choice ? m1 : m0;  // ideal delivery of q_choice
        Elem tv = choice ? add(got, d) : got;  // q0 + a_h * b_i
        acc = add(acc, mul(pow2[h], tv));
      }
      cross[t] = add(cross[t], acc);
    }
  }
  s.round_barrier();
  s.round_barrier();

  // Own sender-side contribution: -(sum 2^h q0).
  for (u16 j = 0; j < n; ++j) {
    if (j == me) continue;
    for (u64 t = 0; t < count; ++t) {
      Elem acc = zero(dom);
      for (unsigned h = 0; h < tau; ++h) acc = add(acc, mul(pow2[h], q0[j][t * tau + h]));
      cross[t] = sub(cross[t], acc);
    }
  }

  std::vector<Triple> out;
  out.reserve(count);
  for (u64 t = 0; t < count; ++t) {
    Elem c = add(mul(a[t], b[t]), cross[t]);
    auto mk = [&](const Elem& v) {
      Share sh = share_of_public(zero(dom), scheme, me, n);
      sh.set_component(0, v);
      return SVal{sh, std::nullopt};
    };
    out.push_back(Triple{mk(a[t]), mk(b[t]), mk(c)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Furukawa binary triples and bucket cut-and-choose
// ---------------------------------------------------------------------------

std::vector<Triple> furukawa_semi_triples(Session& s, u64 count) {
  auto a = s.random_bits_rep3(count);
  auto b = s.random_bits_rep3(count);
  auto c = s.sh_and(a, b);
  std::vector<Triple> out;
  out.reserve(count);
  for (u64 i = 0; i < count; ++i)
    out.push_back(Triple{SVal{a[i], std::nullopt}, SVal{b[i], std::nullopt},
                         SVal{c[i], std::nullopt}});
  return out;
}

namespace {

// Pairwise sacrifice: open rho = x - a and sigma = y - b, then require
// w = z - c - sigma*a - rho*b - rho*sigma to open to zero.
void pairwise_sacrifice(Session& s, std::span<const Triple> targets,
                        std::span<const Triple> aux) {
  if (targets.empty()) return;
  const std::size_t len = targets.size();
  std::vector<SVal> opens;
  opens.reserve(2 * len);
  for (std::size_t i = 0; i < len; ++i) opens.push_back(s.sval_sub(targets[i].a, aux[i].a));
  for (std::size_t i = 0; i < len; ++i) opens.push_back(s.sval_sub(targets[i].b, aux[i].b));
  auto opened = s.open_vec(opens);

  std::vector<SVal> ws;
  ws.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const Elem& rho = opened[i];
    const Elem& sigma = opened[len + i];
    SVal w = s.sval_sub(targets[i].c, aux[i].c);
    w = s.sval_sub(w, s.sval_scale(sigma, aux[i].a));
    w = s.sval_sub(w, s.sval_scale(rho, aux[i].b));
    w = s.sval_sub(w, public_like(s, targets[i].c, mul(rho, sigma)));
    ws.push_back(w);
  }
  auto w_open = s.open_vec(ws);
  for (const auto& w : w_open)
    if (!w.is_zero()) fail(Errc::Abort, "sacrifice pair rejected a triple");
}

}  // namespace

BucketResult bucket_cut_and_choose(Session& s, const BucketParams& p, const TripleSource& source,
                                   const CorruptHook& corrupt,
                                   const std::vector<std::vector<u32>>* forced_perms) {
  const u64 N = p.n_out;
  const u32 B = p.buckets, C = p.opened_per_subarray, L = p.subarrays;
  if (N == 0) return {};
  if (B < 2 || L == 0 || N % L != 0) fail(Errc::ParamError, "bucket parameters do not divide");
  const u64 X = N / L + C;
  const u64 per_extra = N + u64(L) * C;
  const u64 total = N + u64(B - 1) * per_extra;
  const u64 M = 2 * per_extra * (B - 1) + 2 * N;  // random sharings consumed

  auto triples = source(total);
  if (triples.size() != total) fail(Errc::ParamError, "triple source returned a short batch");
  if (corrupt) corrupt(triples);

  std::size_t perm_idx = 0;
  auto next_perm = [&](u32 size) -> std::vector<u32> {
    if (forced_perms) {
      if (perm_idx >= forced_perms->size()) fail(Errc::ParamError, "not enough forced perms");
      return (*forced_perms)[perm_idx++];
    }
    return s.joint_prg().permutation(size);
  };

  std::vector<Triple> d1(triples.begin(), triples.begin() + N);
  std::vector<std::vector<Triple>> dk;
  std::size_t base = N;
  for (u32 k = 1; k < B; ++k) {
    dk.emplace_back(triples.begin() + base, triples.begin() + base + per_extra);
    base += per_extra;
  }

  std::vector<Triple> open_targets;
  for (auto& block : dk) {
    // Permute within each subarray, then permute the subarray order.
    std::vector<std::vector<Triple>> subs(L);
    for (u32 l = 0; l < L; ++l) {
      subs[l].assign(block.begin() + l * X, block.begin() + (l + 1) * X);
      auto perm = next_perm(u32(X));
      std::vector<Triple> shuffled(X);
      for (u64 i = 0; i < X; ++i) shuffled[i] = subs[l][perm[i]];
      subs[l] = std::move(shuffled);
    }
    auto order = next_perm(L);
    std::vector<std::vector<Triple>> reordered(L);
    for (u32 l = 0; l < L; ++l) reordered[l] = std::move(subs[order[l]]);

    block.clear();
    for (u32 l = 0; l < L; ++l) {
      for (u64 i = 0; i < X; ++i) {
        if (i < C) {
          open_targets.push_back(reordered[l][i]);
        } else {
          block.push_back(reordered[l][i]);
        }
      }
    }
  }

  // Open the chosen triples and check the relation in the clear.
  if (!open_targets.empty()) {
    std::vector<SVal> opens;
    for (const auto& t : open_targets) {
      opens.push_back(t.a);
      opens.push_back(t.b);
      opens.push_back(t.c);
    }
    auto vals = s.open_vec(opens);
    for (std::size_t i = 0; i < open_targets.size(); ++i) {
      if (!(mul(vals[3 * i], vals[3 * i + 1]) == vals[3 * i + 2]))
        fail(Errc::Abort, "opened triple failed the relation");
    }
  }

  // Buckets: entry i of every block validates d1[i].
  for (const auto& block : dk) pairwise_sacrifice(s, d1, block);

  BucketResult result;
  result.triples = std::move(d1);
  result.sharings_requested = M;
  return result;
}

std::vector<Triple> furukawa_triple_gen(Session& s, u64 count, const CorruptHook& corrupt) {
  if (count == 0) return {};
  BucketParams p;
  p.n_out = count;
  p.buckets = 2;
  p.opened_per_subarray = 1;
  p.subarrays = 1;
  auto source = [&](u64 n) { return furukawa_semi_triples(s, n); };
  return bucket_cut_and_choose(s, p, source, corrupt).triples;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void sacrifice_check(Session& s, std::span<const Triple> targets, std::span<const Triple> aux) {
  if (targets.empty()) return;  // vacuous accept
  const Domain dom = targets.front().a.value.dom;
  if (dom.kind != DomainKind::PrimeField)
    fail(Errc::ParamError, "sacrifice runs over a prime field");
  if (aux.size() < targets.size()) fail(Errc::InsufficientShares, "one auxiliary per target");
  LogSuppress guard(s);
  const std::size_t N = targets.size();

  SVal alpha = s.random_svals(1).front();
  std::vector<SVal> alpha_rep(N, alpha);
  std::vector<SVal> xs, ys, zs, as, bs, cs;
  for (std::size_t i = 0; i < N; ++i) {
    xs.push_back(targets[i].a);
    ys.push_back(targets[i].b);
    zs.push_back(targets[i].c);
    as.push_back(aux[i].a);
    bs.push_back(aux[i].b);
    cs.push_back(aux[i].c);
  }

  auto ax = s.mul_vec(alpha_rep, xs);
  std::vector<SVal> rho(N), sigma(N);
  for (std::size_t i = 0; i < N; ++i) {
    rho[i] = s.sval_add(ax[i], as[i]);
    sigma[i] = s.sval_add(ys[i], bs[i]);
  }
  auto az = s.mul_vec(alpha_rep, zs);
  auto a_sigma = s.mul_vec(as, sigma);
  auto rho_y = s.mul_vec(rho, ys);

  Elem alpha_pub = s.open1(alpha);
  Prg masks = s.joint_prg().fork("sacrifice");

  SVal v = public_like(s, targets.front().c, zero(dom));
  for (std::size_t i = 0; i < N; ++i) {
    Elem phi = sample(masks, dom);
    SVal vi = az[i];
    vi = s.sval_add(vi, s.sval_scale(mul(alpha_pub, phi), xs[i]));
    vi = s.sval_sub(vi, cs[i]);
    vi = s.sval_add(vi, a_sigma[i]);
    vi = s.sval_add(vi, s.sval_scale(phi, as[i]));
    vi = s.sval_sub(vi, rho_y[i]);
    vi = s.sval_sub(vi, s.sval_scale(phi, rho[i]));
    Elem beta = sample_nonzero(masks, dom);
    v = s.sval_add(v, s.sval_scale(beta, vi));
  }
  Elem r = sample_nonzero(masks, dom);
  Elem w = s.open1(s.sval_scale(r, v));
  if (!w.is_zero()) fail(Errc::Abort, "sacrifice rejected the batch");
}

void batch_poly_check(Session& s, std::span<const Triple> triples,
                      std::optional<Elem> forced_point) {
  if (triples.empty()) return;
  const Domain dom = triples.front().a.value.dom;
  if (dom.kind != DomainKind::PrimeField)
    fail(Errc::ParamError, "polynomial batch check needs a prime field");
  const std::size_t N = triples.size();
  if (!(U192{u128(2 * N - 1)} < U192{dom.modulus}))
    fail(Errc::ParamError, "modulus too small for the batch size");
  LogSuppress guard(s);

  if (N == 1) {
    // Degenerate direct open-and-check.
    std::vector<SVal> opens{triples[0].a, triples[0].b, triples[0].c};
    auto vals = s.open_vec(opens);
    if (!(mul(vals[0], vals[1]) == vals[2])) fail(Errc::Abort, "triple failed the open check");
    return;
  }

  std::vector<Elem> base_pts;
  for (std::size_t i = 1; i <= N; ++i) base_pts.push_back(make_elem(u128(i), dom));

  // Extra evaluations of f and g at N+1..2N-1 (local), then secure products
  // define h there.
  std::vector<SVal> f_extra, g_extra;
  for (std::size_t j = N + 1; j <= 2 * N - 1; ++j) {
    Elem at = make_elem(u128(j), dom);
    auto lambda = lagrange_coeffs(base_pts, at);
    SVal f = s.sval_scale(lambda[0], triples[0].a);
    SVal g = s.sval_scale(lambda[0], triples[0].b);
    for (std::size_t i = 1; i < N; ++i) {
      f = s.sval_add(f, s.sval_scale(lambda[i], triples[i].a));
      g = s.sval_add(g, s.sval_scale(lambda[i], triples[i].b));
    }
    f_extra.push_back(f);
    g_extra.push_back(g);
  }
  auto h_extra = s.mul_vec(f_extra, g_extra);

  Elem z = forced_point ? *forced_point : sample(s.joint_prg(), dom);

  auto lambda_f = lagrange_coeffs(base_pts, z);
  SVal fz = s.sval_scale(lambda_f[0], triples[0].a);
  SVal gz = s.sval_scale(lambda_f[0], triples[0].b);
  for (std::size_t i = 1; i < N; ++i) {
    fz = s.sval_add(fz, s.sval_scale(lambda_f[i], triples[i].a));
    gz = s.sval_add(gz, s.sval_scale(lambda_f[i], triples[i].b));
  }
  std::vector<Elem> h_pts = base_pts;
  for (std::size_t j = N + 1; j <= 2 * N - 1; ++j) h_pts.push_back(make_elem(u128(j), dom));
  auto lambda_h = lagrange_coeffs(h_pts, z);
  SVal hz = s.sval_scale(lambda_h[0], triples[0].c);
  for (std::size_t i = 1; i < N; ++i) hz = s.sval_add(hz, s.sval_scale(lambda_h[i], triples[i].c));
  for (std::size_t j = 0; j < N - 1; ++j)
    hz = s.sval_add(hz, s.sval_scale(lambda_h[N + j], h_extra[j]));

  std::vector<SVal> opens{fz, gz, hz};
  auto vals = s.open_vec(opens);
  if (!(mul(vals[0], vals[1]) == vals[2]))
    fail(Errc::Abort, "polynomial identity failed at the sampled point");
}

void ring_triple_check_vec(Session& s, std::span<const Triple> targets,
                           std::span<const Triple> aux) {
  if (targets.empty()) return;
  const Domain dom = targets.front().a.value.dom;
  if (dom.kind != DomainKind::Ring) fail(Errc::ParamError, "ring check needs a ring domain");
  if (aux.size() < targets.size()) fail(Errc::InsufficientShares, "one auxiliary per target");
  LogSuppress guard(s);
  const std::size_t N = targets.size();

  Prg rs = s.joint_prg().fork("ring-check");
  std::vector<Elem> r;
  for (std::size_t i = 0; i < N; ++i) r.push_back(sample(rs, dom));

  std::vector<SVal> opens;
  opens.reserve(2 * N);
  for (std::size_t i = 0; i < N; ++i)
    opens.push_back(s.sval_sub(s.sval_scale(r[i], targets[i].a), aux[i].a));
  for (std::size_t i = 0; i < N; ++i) opens.push_back(s.sval_sub(targets[i].b, aux[i].b));
  auto opened = s.open_vec(opens);

  std::vector<SVal> ws;
  for (std::size_t i = 0; i < N; ++i) {
    const Elem& rho = opened[i];
    const Elem& sigma = opened[N + i];
    SVal w = s.sval_sub(s.sval_scale(r[i], targets[i].c), aux[i].c);
    w = s.sval_sub(w, s.sval_scale(sigma, aux[i].a));
    w = s.sval_sub(w, s.sval_scale(rho, aux[i].b));
    w = s.sval_sub(w, public_like(s, targets[i].c, mul(rho, sigma)));
    ws.push_back(w);
  }
  auto w_open = s.open_vec(ws);
  for (const auto& w : w_open)
    if (!w.is_zero()) fail(Errc::Abort, "ring triple check rejected");
}

void ring_triple_check(Session& s, const Triple& target, const Triple& aux) {
  ring_triple_check_vec(s, std::span<const Triple>(&target, 1), std::span<const Triple>(&aux, 1));
}

void postprocess_check(Session& s, std::span<const std::array<SVal, 3>> log) {
  if (log.empty()) return;
  LogSuppress guard(s);
  const std::size_t N = log.size();
  std::vector<Triple> targets;
  targets.reserve(N);
  for (const auto& e : log) targets.push_back(Triple{e[0], e[1], e[2]});

  // Fresh auxiliaries: random factors with an optimistically computed product.
  auto a = s.random_svals(N);
  auto b = s.random_svals(N);
  auto c = s.mul_vec(a, b);
  std::vector<Triple> aux;
  aux.reserve(N);
  for (std::size_t i = 0; i < N; ++i) aux.push_back(Triple{a[i], b[i], c[i]});

  if (s.share_dom().kind == DomainKind::Ring) {
    ring_triple_check_vec(s, targets, aux);
  } else {
    sacrifice_check(s, targets, aux);
  }
}

// ---------------------------------------------------------------------------
// daBits / edaBits with an opened-sample spot check
// ---------------------------------------------------------------------------

namespace {
constexpr u64 kSpotChecks = 8;
}

void gen_dabits(Session& s, u64 count, std::deque<DaBit>& out) {
  if (count == 0) return;
  const auto& cfg = s.cfg();
  const u64 fetch = count + kSpotChecks;
  Scheme bin = cfg.binary_scheme();
  u16 bin_n = bin == Scheme::Rep4 ? 4 : cfg.n_parties;
  auto bytes = roundtrip(s, Op::Dabits, fetch, 0);
  std::vector<DaBit> got;
  std::size_t off = 0;
  for (u64 i = 0; i < fetch; ++i) {
    DaBit d;
    d.arith = read_sval(bytes, off, cfg.scheme(), s.party(), s.n(), s.share_dom(),
                        cfg.authenticated());
    d.bin = read_bin_share(bytes, off, bin, s.party(), bin_n);
    got.push_back(d);
  }

  // Spot check: open a joint sample in both domains and compare.
  Prg pick = s.joint_prg().fork("dabit-check");
  std::vector<bool> used(fetch, false);
  std::vector<u64> sample_idx;
  while (sample_idx.size() < kSpotChecks) {
    u64 i = pick.below(fetch);
    if (used[i]) continue;
    used[i] = true;
    sample_idx.push_back(i);
  }
  std::vector<SVal> arith;
  std::vector<Share> bins;
  for (u64 i : sample_idx) {
    arith.push_back(got[i].arith);
    bins.push_back(got[i].bin);
  }
  auto a_open = s.open_vec(arith);
  auto b_open = s.open_bits(bins);
  for (std::size_t i = 0; i < sample_idx.size(); ++i) {
    if (!(a_open[i].v == b_open[i].v))
      fail(Errc::Abort, "daBit domains disagree");
  }
  for (u64 i = 0; i < fetch; ++i)
    if (!used[i]) out.push_back(std::move(got[i]));
}

void gen_edabits(Session& s, u64 count, unsigned m, std::deque<EdaBit>& out) {
  if (count == 0) return;
  const auto& cfg = s.cfg();
  if (m == 0 || m > cfg.domain.bit_length())
    fail(Errc::ParamError, "edabit width exceeds the modulus length");
  const u64 fetch = count + kSpotChecks;
  Scheme bin = cfg.binary_scheme();
  u16 bin_n = bin == Scheme::Rep4 ? 4 : cfg.n_parties;
  auto bytes = roundtrip(s, Op::Edabits, fetch, m);
  std::vector<EdaBit> got;
  std::size_t off = 0;
  for (u64 i = 0; i < fetch; ++i) {
    EdaBit e;
    e.arith = read_sval(bytes, off, cfg.scheme(), s.party(), s.n(), s.share_dom(),
                        cfg.authenticated());
    for (unsigned j = 0; j < m; ++j)
      e.bits.push_back(read_bin_share(bytes, off, bin, s.party(), bin_n));
    got.push_back(e);
  }

  Prg pick = s.joint_prg().fork("edabit-check");
  std::vector<bool> used(fetch, false);
  std::vector<u64> sample_idx;
  while (sample_idx.size() < kSpotChecks) {
    u64 i = pick.below(fetch);
    if (used[i]) continue;
    used[i] = true;
    sample_idx.push_back(i);
  }
  std::vector<SVal> arith;
  std::vector<Share> bins;
  for (u64 i : sample_idx) {
    arith.push_back(got[i].arith);
    for (const auto& bit : got[i].bits) bins.push_back(bit);
  }
  auto a_open = s.open_vec(arith);
  auto b_open = s.open_bits(bins);
  for (std::size_t i = 0; i < sample_idx.size(); ++i) {
    U192 recomposed;
    for (unsigned j = 0; j < m; ++j)
      if (!b_open[i * m + j].is_zero()) recomposed = add192(recomposed, pow2_192(j));
    if (!(make_elem(recomposed, a_open[i].dom) == a_open[i]))
      fail(Errc::Abort, "edaBit bits do not recompose to the arithmetic value");
  }
  for (u64 i = 0; i < fetch; ++i)
    if (!used[i]) out.push_back(std::move(got[i]));
}

// ---------------------------------------------------------------------------
// Pool filling
// ---------------------------------------------------------------------------

void fill_pools(Session& s, const PrepBudget& budget) {
  const auto& cfg = s.cfg();

  if (budget.triples > 0 && cfg.uses_beaver() && cfg.family != Family::FurukawaBin) {
    const u64 T = budget.triples;
    switch (cfg.validation) {
      case Validation::None:
      case Validation::Postprocess: {
        for (auto& t : fetch_triples(s, T, false)) s.triple_pool().push_back(t);
        break;
      }
      case Validation::Sacrifice: {
        // Internal multiplications consume 4 pool triples per target.
        for (auto& t : fetch_triples(s, 4 * T, false)) s.triple_pool().push_back(t);
        auto targets = fetch_triples(s, T, false);
        auto aux = fetch_triples(s, T, false);
        sacrifice_check(s, targets, aux);
        if (!s.triple_pool().empty())
          fail(Errc::ParamError, "sacrifice internals misbudgeted");
        for (auto& t : targets) s.triple_pool().push_back(t);
        break;
      }
      case Validation::BatchPoly: {
        for (auto& t : fetch_triples(s, T > 1 ? T - 1 : 0, false)) s.triple_pool().push_back(t);
        auto targets = fetch_triples(s, T, false);
        batch_poly_check(s, targets);
        if (!s.triple_pool().empty())
          fail(Errc::ParamError, "batch check internals misbudgeted");
        if (T > 1) {
          for (auto& t : targets) s.triple_pool().push_back(t);
        } else {
          // The degenerate N=1 check opened the triple; fetch a fresh one.
          for (auto& t : fetch_triples(s, T, false)) s.triple_pool().push_back(t);
        }
        break;
      }
      case Validation::RingCheck: {
        auto targets = fetch_triples(s, T, false);
        auto aux = fetch_triples(s, T, false);
        ring_triple_check_vec(s, targets, aux);
        for (auto& t : targets) s.triple_pool().push_back(t);
        break;
      }
      case Validation::BucketCnc:
        fail(Errc::ConfigError, "bucket cut-and-choose applies to binary triples here");
    }
  }

  if (budget.bin_triples > 0) {
    if (cfg.family == Family::FurukawaBin) {
      if (cfg.validation == Validation::BucketCnc) {
        for (auto& t : furukawa_triple_gen(s, budget.bin_triples))
          s.bin_triple_pool().push_back(t);
      }
      // Semi-honest runs AND gates directly, no triples needed.
    } else if (cfg.binary_scheme() == Scheme::Xor) {
      for (auto& t : fetch_triples(s, budget.bin_triples, true)) s.bin_triple_pool().push_back(t);
    }
  }

  if (budget.dabits > 0) gen_dabits(s, budget.dabits, s.dabit_pool());
  if (budget.edabits > 0) gen_edabits(s, budget.edabits, budget.edabit_bits, s.edabit_pool());

  if (budget.arith_bits > 0) {
    auto bytes = roundtrip(s, Op::ArithBits, budget.arith_bits, 0);
    std::size_t off = 0;
    for (u64 i = 0; i < budget.arith_bits; ++i)
      s.arith_bit_pool().push_back(read_sval(bytes, off, cfg.scheme(), s.party(), s.n(),
                                             s.share_dom(), cfg.authenticated()));
  }

  if (budget.random_vals > 0) {
    if (cfg.authenticated()) {
      std::vector<SVal> rs;
      fetch_randoms(s, budget.random_vals, rs);
      for (auto& r : rs) s.random_pool().push_back(r);
    } else {
      for (auto& r : s.random_svals(budget.random_vals)) s.random_pool().push_back(r);
    }
  }
}

// ---------------------------------------------------------------------------
// Fault injection and persistence
// ---------------------------------------------------------------------------

void corrupt_triple(std::vector<Triple*> per_party, TripleLeg leg, const Elem& delta) {
  auto pick = [&](Triple& t) -> SVal& {
    switch (leg) {
      case TripleLeg::A: return t.a;
      case TripleLeg::B: return t.b;
      case TripleLeg::C: return t.c;
    }
    return t.c;
  };
  const Scheme scheme = pick(*per_party[0]).value.scheme;
  switch (scheme) {
    case Scheme::Additive:
    case Scheme::Xor: {
      Share& sh = pick(*per_party[0]).value;
      sh.set_component(0, add(sh.component(0), delta));
      break;
    }
    case Scheme::Rep3: {
      // Summand x_0 lives at party 0 (first) and party 2 (second).
      Share& first = pick(*per_party[0]).value;
      first.set_component(0, add(first.component(0), delta));
      Share& second = pick(*per_party[2]).value;
      second.set_component(1, add(second.component(1), delta));
      break;
    }
    case Scheme::Shamir: {
      for (auto* t : per_party) {
        Share& sh = pick(*t).value;
        sh.set_component(0, add(sh.component(0), delta));
      }
      break;
    }
    case Scheme::Rep4: {
      // Summand x_0 is held by parties 1, 2, 3 at component 0.
      for (u16 p = 1; p < 4; ++p) {
        Share& sh = pick(*per_party[p]).value;
        sh.set_component(0, add(sh.component(0), delta));
      }
      break;
    }
  }
}

namespace {
void put_u64(std::vector<u8>& out, u64 v) {
  for (int i = 0; i < 8; ++i) out.push_back(u8(v >> (8 * i)));
}
u64 get_u64(std::span<const u8> in, std::size_t& off) {
  if (off + 8 > in.size()) fail(Errc::IoError, "truncated pool file");
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= u64(in[off + i]) << (8 * i);
  off += 8;
  return v;
}
}  // namespace

void save_triples(const std::string& path, const ProtocolConfig& cfg,
                  std::span<const Triple> triples) {
  std::vector<u8> out;
  out.insert(out.end(), {'M', 'P', 'F', 'T', 1, 0});
  out.push_back(u8(cfg.domain.kind));
  put_u64(out, u64(cfg.domain.modulus));
  put_u64(out, u64(cfg.domain.modulus >> 64));
  out.push_back(u8(cfg.share_domain().k & 0xff));
  out.push_back(u8(cfg.share_domain().k >> 8));
  out.push_back(u8(cfg.domain.s & 0xff));
  out.push_back(u8(cfg.domain.s >> 8));
  out.push_back(cfg.authenticated() ? 1 : 0);
  out.push_back(u8(cfg.scheme()));
  u16 party = triples.empty() ? 0 : triples.front().a.value.party;
  out.push_back(u8(party & 0xff));
  out.push_back(u8(party >> 8));
  put_u64(out, triples.size());
  for (const auto& t : triples) {
    append_sval(out, t.a);
    append_sval(out, t.b);
    append_sval(out, t.c);
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(Errc::IoError, "cannot open " + path);
  std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
}

std::vector<Triple> load_triples(const std::string& path, const ProtocolConfig& cfg) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(Errc::IoError, "cannot open " + path);
  std::vector<u8> bytes;
  u8 buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) bytes.insert(bytes.end(), buf, buf + got);
  std::fclose(f);

  std::size_t off = 0;
  if (bytes.size() < 6 || std::memcmp(bytes.data(), "MPFT", 4) != 0)
    fail(Errc::IoError, "bad pool file magic");
  off = 6;
  DomainKind kind = DomainKind(bytes[off++]);
  u64 mod_lo = get_u64(bytes, off);
  u64 mod_hi = get_u64(bytes, off);
  u16 k = u16(bytes[off] | (bytes[off + 1] << 8));
  off += 2;
  u16 sbits = u16(bytes[off] | (bytes[off + 1] << 8));
  off += 2;
  bool auth = bytes[off++] != 0;
  Scheme scheme = Scheme(bytes[off++]);
  u16 party = u16(bytes[off] | (bytes[off + 1] << 8));
  off += 2;
  u64 count = get_u64(bytes, off);

  Domain dom = cfg.share_domain();
  if (kind != cfg.domain.kind || u128(mod_lo) != u128(u64(cfg.domain.modulus)) ||
      mod_hi != u64(cfg.domain.modulus >> 64) || k != dom.k || sbits != cfg.domain.s ||
      auth != cfg.authenticated() || scheme != cfg.scheme())
    fail(Errc::IoError, "pool file does not match the configuration");

  std::vector<Triple> out;
  out.reserve(count);
  for (u64 i = 0; i < count; ++i) {
    Triple t;
    t.a = read_sval(bytes, off, scheme, party, cfg.n_parties, dom, auth);
    t.b = read_sval(bytes, off, scheme, party, cfg.n_parties, dom, auth);
    t.c = read_sval(bytes, off, scheme, party, cfg.n_parties, dom, auth);
    out.push_back(t);
  }
  if (off != bytes.size()) fail(Errc::IoError, "trailing bytes in pool file");
  return out;
}

}  // namespace prep

void dealer_main(const ProtocolConfig& cfg, Net& net, u64 run_seed) {
  prep::dealer_main_loop(cfg, net, run_seed);
}

}  // namespace mpcforge
