#include "mpcforge/engine.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <thread>

#include "mpcforge/digest.hpp"
#include "mpcforge/poly.hpp"
#include "mpcforge/prep.hpp"

namespace mpcforge {

const char* family_name(Family f) {
  switch (f) {
    case Family::Semi: return "semi";
    case Family::Semi2k: return "semi2k";
    case Family::Rep3Ring: return "rep3ring";
    case Family::MalRepRing: return "malrepring";
    case Family::SpdzField: return "spdzfield";
    case Family::Spdz2k: return "spdz2k";
    case Family::Shamir: return "shamir";
    case Family::MalShamir: return "malshamir";
    case Family::Rep4: return "rep4";
    case Family::FurukawaBin: return "furukawabin";
  }
  return "?";
}

const char* validation_name(Validation v) {
  switch (v) {
    case Validation::None: return "none";
    case Validation::Sacrifice: return "sacrifice";
    case Validation::BatchPoly: return "batch_poly";
    case Validation::RingCheck: return "ring_check";
    case Validation::Postprocess: return "postprocess";
    case Validation::BucketCnc: return "bucket_cnc";
  }
  return "?";
}

const char* conversion_name(ConversionMode c) {
  switch (c) {
    case ConversionMode::Local: return "local";
    case ConversionMode::Dabit: return "dabit";
    case ConversionMode::Edabit: return "edabit";
    case ConversionMode::Off: return "off";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  for (auto f : {Family::Semi, Family::Semi2k, Family::Rep3Ring, Family::MalRepRing,
                 Family::SpdzField, Family::Spdz2k, Family::Shamir, Family::MalShamir,
                 Family::Rep4, Family::FurukawaBin}) {
    if (s == family_name(f)) return f;
  }
  fail(Errc::ConfigError, "unknown family: " + s);
}

Validation validation_from_string(const std::string& s) {
  for (auto v : {Validation::None, Validation::Sacrifice, Validation::BatchPoly,
                 Validation::RingCheck, Validation::Postprocess, Validation::BucketCnc}) {
    if (s == validation_name(v)) return v;
  }
  fail(Errc::ConfigError, "unknown validation: " + s);
}

ConversionMode conversion_from_string(const std::string& s) {
  for (auto c : {ConversionMode::Local, ConversionMode::Dabit, ConversionMode::Edabit,
                 ConversionMode::Off}) {
    if (s == conversion_name(c)) return c;
  }
  fail(Errc::ConfigError, "unknown conversion mode: " + s);
}

ProtocolConfig ProtocolConfig::defaults_for(Family f, u16 n_parties, const Domain& d) {
  ProtocolConfig c;
  c.family = f;
  c.n_parties = n_parties;
  c.domain = d;
  switch (f) {
    case Family::Semi:
    case Family::Semi2k:
    case Family::Shamir:
    case Family::Rep4:
      c.validation = Validation::None;
      c.conversion = ConversionMode::Edabit;
      break;
    case Family::Rep3Ring:
      c.validation = Validation::None;
      c.conversion = ConversionMode::Local;
      break;
    case Family::MalRepRing:
      c.validation = Validation::Postprocess;
      c.conversion = ConversionMode::Local;
      break;
    case Family::SpdzField:
      c.validation = Validation::Sacrifice;
      c.conversion = ConversionMode::Edabit;
      break;
    case Family::Spdz2k:
      c.validation = Validation::RingCheck;
      c.conversion = ConversionMode::Edabit;
      break;
    case Family::MalShamir:
      c.validation = Validation::Postprocess;
      c.conversion = ConversionMode::Edabit;
      break;
    case Family::FurukawaBin:
      c.validation = Validation::BucketCnc;
      c.conversion = ConversionMode::Off;  // values live as bits already
      break;
  }
  if (n_parties > 0) c.threshold = u16((n_parties - 1) / 2);
  return c;
}

void ProtocolConfig::validate() const {
  switch (family) {
    case Family::Rep3Ring:
    case Family::MalRepRing:
    case Family::FurukawaBin:
      if (n_parties != 3) fail(Errc::ConfigError, "family requires exactly 3 parties");
      break;
    case Family::Rep4:
      if (n_parties != 4) fail(Errc::ConfigError, "family requires exactly 4 parties");
      break;
    case Family::Shamir:
    case Family::MalShamir:
      if (threshold < 1 || n_parties < 2 * threshold + 1)
        fail(Errc::ConfigError, "honest majority requires n >= 2t+1 with t >= 1");
      break;
    default:
      if (n_parties < 2) fail(Errc::ConfigError, "need at least 2 parties");
      break;
  }
  switch (family) {
    case Family::Semi:
    case Family::SpdzField:
    case Family::Shamir:
    case Family::MalShamir:
      if (domain.kind != DomainKind::PrimeField)
        fail(Errc::ConfigError, "family computes over a prime field");
      break;
    case Family::Semi2k:
    case Family::Spdz2k:
    case Family::Rep3Ring:
    case Family::MalRepRing:
    case Family::Rep4:
      if (domain.kind != DomainKind::Ring) fail(Errc::ConfigError, "family computes over a ring");
      break;
    case Family::FurukawaBin:
      if (domain.kind != DomainKind::Binary)
        fail(Errc::ConfigError, "family computes over the binary domain");
      break;
  }
  if (validation == Validation::Sacrifice || validation == Validation::BatchPoly) {
    if (domain.kind != DomainKind::PrimeField && family != Family::FurukawaBin)
      fail(Errc::ConfigError, "field-only validation over a ring");
  }
  if (domain.kind != DomainKind::Binary && value_bits == 0)
    fail(Errc::ConfigError, "value_bits must be positive");
  if (domain.kind == DomainKind::Ring && value_bits > domain.k)
    fail(Errc::ConfigError, "value_bits exceeds ring width");
  if (domain.kind == DomainKind::PrimeField) {
    // Bounded values need headroom for statistically masked openings.
    if (pow2_192(value_bits + 1) > U192{domain.modulus})
      fail(Errc::ConfigError, "value_bits too large for the field modulus");
  }
  if (conversion == ConversionMode::Local && family != Family::Rep3Ring &&
      family != Family::MalRepRing)
    fail(Errc::ConfigError, "local share conversion needs replicated ring sharing");
}

Scheme ProtocolConfig::scheme() const {
  switch (family) {
    case Family::Semi:
    case Family::Semi2k:
    case Family::SpdzField:
    case Family::Spdz2k: return Scheme::Additive;
    case Family::Rep3Ring:
    case Family::MalRepRing: return Scheme::Rep3;
    case Family::Shamir:
    case Family::MalShamir: return Scheme::Shamir;
    case Family::Rep4: return Scheme::Rep4;
    case Family::FurukawaBin: return Scheme::Rep3;
  }
  return Scheme::Additive;
}

Scheme ProtocolConfig::binary_scheme() const {
  switch (family) {
    case Family::Rep3Ring:
    case Family::MalRepRing:
    case Family::FurukawaBin: return Scheme::Rep3;
    case Family::Rep4: return Scheme::Rep4;
    default: return Scheme::Xor;
  }
}

bool ProtocolConfig::malicious() const {
  switch (family) {
    case Family::MalRepRing:
    case Family::SpdzField:
    case Family::Spdz2k:
    case Family::MalShamir:
    case Family::Rep4: return true;
    case Family::FurukawaBin: return validation != Validation::None;
    default: return false;
  }
}

bool ProtocolConfig::has_dealer() const {
  if (authenticated()) return true;  // key + authenticated randomness
  if (family == Family::Semi || family == Family::Semi2k) return true;
  // Conversion randomness comes from the dealer for every family.
  if (conversion == ConversionMode::Dabit || conversion == ConversionMode::Edabit) return true;
  if (conversion == ConversionMode::Off && domain.kind != DomainKind::Binary) return true;
  // Boolean AND triples for additive-xor backends.
  if (binary_scheme() == Scheme::Xor) return true;
  return false;
}

bool ProtocolConfig::uses_beaver() const {
  switch (family) {
    case Family::Semi:
    case Family::Semi2k:
    case Family::SpdzField:
    case Family::Spdz2k: return true;
    case Family::FurukawaBin: return validation != Validation::None;
    default: return false;
  }
}

Domain ProtocolConfig::share_domain() const {
  if (family == Family::Spdz2k) return mac_domain_for(domain);
  if (family == Family::MalRepRing) return domain.extended(ring_lambda());
  return domain;
}

u16 ProtocolConfig::ring_lambda() const { return domain.s; }

std::string ProtocolConfig::serialize() const {
  std::ostringstream os;
  os << "family=" << family_name(family) << "\n";
  os << "parties=" << n_parties << "\n";
  os << "domain_kind="
     << (domain.kind == DomainKind::PrimeField ? "field"
                                               : domain.kind == DomainKind::Ring ? "ring" : "binary")
     << "\n";
  if (domain.kind == DomainKind::PrimeField) {
    os << "modulus_hi=" << u64(domain.modulus >> 64) << "\n";
    os << "modulus_lo=" << u64(domain.modulus) << "\n";
  }
  os << "k=" << domain.k << "\n";
  os << "s=" << domain.s << "\n";
  os << "validation=" << validation_name(validation) << "\n";
  os << "conversion=" << conversion_name(conversion) << "\n";
  os << "threshold=" << threshold << "\n";
  os << "value_bits=" << value_bits << "\n";
  os << "seed=" << seed << "\n";
  os << "timeout_s=" << timeout_s << "\n";
  return os.str();
}

ProtocolConfig ProtocolConfig::parse(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::ConfigError, "bad config line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) fail(Errc::ConfigError, "missing config key: " + key);
    return it->second;
  };
  ProtocolConfig c;
  c.family = family_from_string(need("family"));
  c.n_parties = u16(std::stoul(need("parties")));
  std::string dk = need("domain_kind");
  u16 k = u16(std::stoul(need("k")));
  u16 s = u16(std::stoul(need("s")));
  if (dk == "field") {
    u128 m = (u128(std::stoull(need("modulus_hi"))) << 64) | std::stoull(need("modulus_lo"));
    c.domain = Domain::prime_field(m, s);
  } else if (dk == "ring") {
    c.domain = Domain::ring(k, s);
  } else {
    c.domain = Domain::binary();
  }
  c.validation = validation_from_string(need("validation"));
  c.conversion = conversion_from_string(need("conversion"));
  c.threshold = u16(std::stoul(need("threshold")));
  c.value_bits = unsigned(std::stoul(need("value_bits")));
  c.seed = std::stoull(need("seed"));
  c.timeout_s = std::stod(need("timeout_s"));
  c.validate();
  return c;
}

std::map<std::string, std::string> ProtocolConfig::echo() const {
  return {{"family", family_name(family)},
          {"parties", std::to_string(n_parties)},
          {"domain", domain.to_string()},
          {"validation", validation_name(validation)},
          {"conversion", conversion_name(conversion)},
          {"threshold", std::to_string(threshold)},
          {"value_bits", std::to_string(value_bits)},
          {"seed", std::to_string(seed)}};
}

PrepBudget& PrepBudget::operator+=(const PrepBudget& o) {
  triples += o.triples;
  bin_triples += o.bin_triples;
  dabits += o.dabits;
  edabits += o.edabits;
  edabit_bits = std::max(edabit_bits, o.edabit_bits);
  arith_bits += o.arith_bits;
  random_vals += o.random_vals;
  return *this;
}

PrepBudget PrepBudget::scaled(u64 factor) const {
  PrepBudget b = *this;
  b.triples *= factor;
  b.bin_triples *= factor;
  b.dabits *= factor;
  b.edabits *= factor;
  b.arith_bits *= factor;
  b.random_vals *= factor;
  return b;
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

namespace {

std::vector<u8> elems_to_bytes(std::span<const Elem> es) {
  std::vector<u8> out;
  if (!es.empty()) out.reserve(es.size() * es.front().dom.byte_length());
  for (const auto& e : es) append_elem(out, e);
  return out;
}

std::vector<Elem> bytes_to_elems(std::span<const u8> bytes, const Domain& dom, std::size_t count) {
  std::vector<Elem> out;
  out.reserve(count);
  std::size_t off = 0;
  for (std::size_t i = 0; i < count; ++i) out.push_back(read_elem(bytes, off, dom));
  if (off != bytes.size()) fail(Errc::TransportFailure, "payload length mismatch");
  return out;
}

std::vector<u8> pack_bits(std::span<const Elem> bits) {
  std::vector<u8> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (!bits[i].is_zero()) out[i / 8] |= u8(1u << (i % 8));
  return out;
}

std::vector<Elem> unpack_bits(std::span<const u8> bytes, std::size_t count) {
  if (bytes.size() != (count + 7) / 8) fail(Errc::TransportFailure, "bit payload size mismatch");
  Domain b = Domain::binary();
  std::vector<Elem> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(make_elem(u128((bytes[i / 8] >> (i % 8)) & 1), b));
  return out;
}

}  // namespace

Session::Session(const ProtocolConfig& cfg, Net& net, u64 run_seed)
    : cfg_(cfg),
      net_(net),
      party_(net.id()),
      deadline_(deadline_in(cfg.timeout_s)),
      private_prg_(Prg(run_seed).fork("party-" + std::to_string(net.id()))) {
  cfg_.validate();
}

void Session::setup() {
  const u16 n = cfg_.n_parties;

  // Pairwise seeds: lower id samples and sends.
  pair_prg_.clear();
  for (u16 peer = 0; peer < n; ++peer) {
    if (peer == party_) {
      pair_prg_.push_back(private_prg_.fork("self"));
      continue;
    }
    if (party_ < peer) {
      std::array<u8, 32> seed;
      private_prg_.fill(seed);
      net_.send(peer, msg::kSync, seed);
      pair_prg_.emplace_back(std::span<const u8>(seed.data(), seed.size()));
    } else {
      auto seed = net_.recv(peer, msg::kSync, deadline_);
      if (seed.size() != 32) fail(Errc::TransportFailure, "bad seed exchange");
      pair_prg_.emplace_back(std::span<const u8>(seed.data(), seed.size()));
    }
  }
  round_barrier();

  // Joint PRG by commit-reveal.
  std::array<u8, 32> nonce;
  private_prg_.fill(nonce);
  Digest commit = Sha256::of(std::span<const u8>(nonce.data(), nonce.size()));
  auto commits = broadcast(msg::kCommit, commit);
  auto nonces = broadcast(msg::kReveal, nonce);
  Sha256 h;
  for (u16 i = 0; i < n; ++i) {
    if (nonces[i].size() != 32 || commits[i].size() != 32)
      fail(Errc::TransportFailure, "bad commit/reveal");
    Digest check = Sha256::of(std::span<const u8>(nonces[i].data(), 32));
    if (!std::equal(check.begin(), check.end(), commits[i].begin()))
      fail(Errc::InconsistentBroadcast, "commitment mismatch in joint seed setup");
    h.update(std::span<const u8>(nonces[i].data(), 32));
  }
  Digest joint = h.finish();
  joint_prg_.emplace(std::span<const u8>(joint.data(), joint.size()));

  // Rep4 subset keys K_m (unknown to party m), dealt by the lowest holder.
  if (cfg_.scheme() == Scheme::Rep4) {
    for (u16 m = 0; m < 4; ++m) {
      u16 sampler = (m == 0) ? 1 : 0;
      if (party_ == m) {
        rep4_keys_.push_back(private_prg_.fork("unused"));
        continue;
      }
      if (party_ == sampler) {
        std::array<u8, 32> key;
        private_prg_.fill(key);
        for (u16 q = 0; q < 4; ++q)
          if (q != m && q != sampler) net_.send(q, msg::kSync, key);
        rep4_keys_.emplace_back(std::span<const u8>(key.data(), key.size()));
      } else {
        auto key = net_.recv(sampler, msg::kSync, deadline_);
        if (key.size() != 32) fail(Errc::TransportFailure, "bad rep4 key");
        rep4_keys_.emplace_back(std::span<const u8>(key.data(), key.size()));
      }
    }
    round_barrier();
  }

  if (cfg_.authenticated()) prep::fetch_mac_key(*this, mac_key_);
}

void Session::finish() {
  if (cfg_.has_dealer()) net_.send(dealer_id(), msg::kShutdown, {});
}

// ----- linear layer -----

SVal Session::from_public(const Elem& c) const {
  SVal v;
  v.value = share_of_public(c, cfg_.scheme(), party_, cfg_.n_parties);
  if (cfg_.authenticated()) {
    Share mac = share_of_public(zero(c.dom), Scheme::Additive, party_, cfg_.n_parties);
    mac.set_component(0, mul(mac_key_.front().alpha.component(0), c));
    v.mac = mac;
  }
  return v;
}

Share Session::bin_from_public(const Elem& bit) const {
  Scheme s = cfg_.binary_scheme();
  return share_of_public(bit, s, party_, s == Scheme::Rep4 ? 4 : cfg_.n_parties);
}

SVal Session::sval_add(const SVal& a, const SVal& b) const {
  SVal r;
  r.value = add_shares(a.value, b.value);
  if (a.mac && b.mac) r.mac = add_shares(*a.mac, *b.mac);
  return r;
}

SVal Session::sval_sub(const SVal& a, const SVal& b) const {
  SVal r;
  r.value = sub_shares(a.value, b.value);
  if (a.mac && b.mac) r.mac = sub_shares(*a.mac, *b.mac);
  return r;
}

SVal Session::sval_scale(const Elem& c, const SVal& a) const {
  SVal r;
  r.value = scale_share(c, a.value);
  if (a.mac) r.mac = scale_share(c, *a.mac);
  return r;
}

SVal Session::sval_add_public(const SVal& a, const Elem& w) const {
  if (cfg_.authenticated()) {
    AuthShare sh{a.value, *a.mac};
    AuthShare out = auth_add_public(sh, w, mac_key_.front());
    return SVal{out.value, out.mac};
  }
  SVal r = a;
  r.value = add_shares(a.value, share_of_public(w, a.value.scheme, party_, a.value.n));
  return r;
}

// ----- exchange primitives -----

std::vector<std::vector<u8>> Session::exchange(u8 type,
                                               const std::vector<std::vector<u8>>& to_peers) {
  const u16 n = cfg_.n_parties;
  std::vector<std::vector<u8>> got(n);
  for (u16 peer = 0; peer < n; ++peer) {
    if (peer == party_) continue;
    net_.send(peer, type, to_peers[peer]);
  }
  for (u16 peer = 0; peer < n; ++peer) {
    if (peer == party_) continue;
    got[peer] = net_.recv(peer, type, deadline_);
  }
  round_barrier();
  return got;
}

std::vector<std::vector<u8>> Session::broadcast(u8 type, std::span<const u8> payload) {
  const u16 n = cfg_.n_parties;
  std::vector<u8> mine(payload.begin(), payload.end());
  std::vector<std::vector<u8>> out(n);
  for (u16 peer = 0; peer < n; ++peer) {
    if (peer == party_) continue;
    std::vector<u8> copy = mine;
    if (tamper_next_broadcast && peer == n - 1 && !copy.empty()) {
      copy[0] ^= 1;
    }
    net_.send(peer, type, copy);
  }
  tamper_next_broadcast = false;
  for (u16 peer = 0; peer < n; ++peer) {
    if (peer == party_) {
      out[peer] = mine;
      continue;
    }
    out[peer] = net_.recv(peer, type, deadline_);
  }
  round_barrier();
  return out;
}

void Session::echo_check(std::span<const u8> canonical) {
  Digest h = Sha256::of(canonical);
  auto digests = broadcast(msg::kEcho, h);
  for (const auto& d : digests) {
    if (d.size() != h.size() || !std::equal(h.begin(), h.end(), d.begin()))
      fail(Errc::InconsistentBroadcast, "echo hash mismatch");
  }
}

// ----- openings -----

std::vector<Elem> Session::open_shares(std::span<const Share> shares, bool packed_bits) {
  if (shares.empty()) return {};
  const u16 n = cfg_.n_parties;
  const Scheme scheme = shares.front().scheme;
  const Domain dom = shares.front().dom;
  const std::size_t len = shares.size();

  auto encode = [&](std::span<const Elem> es) {
    return packed_bits ? pack_bits(es) : elems_to_bytes(es);
  };
  auto decode = [&](std::span<const u8> bytes) {
    return packed_bits ? unpack_bits(bytes, len) : bytes_to_elems(bytes, dom, len);
  };

  std::vector<Elem> result;
  result.reserve(len);

  switch (scheme) {
    case Scheme::Additive:
    case Scheme::Xor:
    case Scheme::Shamir: {
      std::vector<Elem> own;
      own.reserve(len);
      for (const auto& s : shares) own.push_back(s.component(0));
      auto all = broadcast(msg::kOpen, encode(own));
      std::vector<std::vector<Elem>> per_party(n);
      for (u16 i = 0; i < n; ++i) per_party[i] = decode(all[i]);
      if (scheme == Scheme::Shamir) {
        u16 quorum = u16(cfg_.threshold + 1);
        std::vector<Elem> xs;
        for (u16 i = 0; i < quorum; ++i) xs.push_back(make_elem(u128(i) + 1, dom));
        auto lambda = lagrange_coeffs(xs, zero(dom));
        for (std::size_t t = 0; t < len; ++t) {
          Elem acc = zero(dom);
          for (u16 i = 0; i < quorum; ++i) acc = add(acc, mul(lambda[i], per_party[i][t]));
          result.push_back(acc);
        }
        if (cfg_.malicious()) {
          // Every share must lie on the interpolated polynomial.
          for (std::size_t t = 0; t < len; ++t) {
            std::vector<std::pair<Elem, Elem>> pts;
            for (u16 i = 0; i < quorum; ++i)
              pts.emplace_back(make_elem(u128(i) + 1, dom), per_party[i][t]);
            Polynomial f = poly_interpolate(pts);
            for (u16 i = quorum; i < n; ++i) {
              if (!(poly_eval(f, make_elem(u128(i) + 1, dom)) == per_party[i][t]))
                fail(Errc::InconsistentBroadcast, "share off the reconstruction polynomial");
            }
          }
        }
      } else {
        for (std::size_t t = 0; t < len; ++t) {
          Elem acc = zero(dom);
          for (u16 i = 0; i < n; ++i) acc = add(acc, per_party[i][t]);
          result.push_back(acc);
        }
        if (cfg_.malicious()) {
          std::vector<u8> canonical;
          for (u16 i = 0; i < n; ++i)
            canonical.insert(canonical.end(), all[i].begin(), all[i].end());
          echo_check(canonical);
        }
      }
      break;
    }
    case Scheme::Rep3: {
      const u16 next = u16((party_ + 1) % 3);
      const u16 prev = u16((party_ + 2) % 3);
      std::vector<Elem> firsts, seconds;
      firsts.reserve(len);
      seconds.reserve(len);
      for (const auto& s : shares) {
        firsts.push_back(s.component(0));
        seconds.push_back(s.component(1));
      }
      // Party i+2 holds x_(i+2) as its first component and sends it to i.
      net_.send(next, msg::kOpen, encode(firsts));
      if (cfg_.malicious()) net_.send(prev, msg::kOpen, encode(seconds));
      auto missing = decode(net_.recv(prev, msg::kOpen, deadline_));
      if (cfg_.malicious()) {
        auto copy = decode(net_.recv(next, msg::kOpen, deadline_));
        for (std::size_t t = 0; t < len; ++t)
          if (!(copy[t] == missing[t]))
            fail(Errc::InconsistentBroadcast, "replicated copies disagree on opening");
      }
      round_barrier();
      for (std::size_t t = 0; t < len; ++t)
        result.push_back(add(add(firsts[t], seconds[t]), missing[t]));
      break;
    }
    case Scheme::Rep4: {
      for (u16 offset = 1; offset <= 2; ++offset) {
        u16 q = u16((party_ + 4 - offset) % 4);  // receivers party-1, party-2
        std::vector<Elem> vals;
        vals.reserve(len);
        for (const auto& s : shares) {
          unsigned idx = q < s.party ? q : q - 1;
          vals.push_back(s.component(idx));
        }
        net_.send(q, msg::kOpen, encode(vals));
      }
      auto copy1 = decode(net_.recv(u16((party_ + 1) % 4), msg::kOpen, deadline_));
      auto copy2 = decode(net_.recv(u16((party_ + 2) % 4), msg::kOpen, deadline_));
      round_barrier();
      for (std::size_t t = 0; t < len; ++t) {
        if (!(copy1[t] == copy2[t]))
          fail(Errc::InconsistentBroadcast, "rep4 copies disagree on opening");
        Elem acc = copy1[t];
        for (unsigned c = 0; c < 3; ++c) acc = add(acc, shares[t].component(c));
        result.push_back(acc);
      }
      break;
    }
  }
  return result;
}

std::vector<Elem> Session::open_vec(std::span<const SVal> xs) {
  std::vector<Share> shares;
  shares.reserve(xs.size());
  for (const auto& x : xs) shares.push_back(x.value);
  auto opened = open_shares(shares, false);
  if (cfg_.authenticated()) {
    for (std::size_t i = 0; i < xs.size(); ++i) accumulate_mac(opened[i], *xs[i].mac);
  }
  return opened;
}

Elem Session::open1(const SVal& x) { return open_vec(std::span<const SVal>(&x, 1)).front(); }

std::vector<Elem> Session::open_bits(std::span<const Share> bits) {
  return open_shares(bits, true);
}

std::vector<Elem> Session::open_to_vec(u16 owner, std::span<const SVal> xs) {
  if (xs.empty()) {
    round_barrier();
    return {};
  }
  const Domain dom = xs.front().value.dom;
  const Scheme scheme = xs.front().value.scheme;
  const std::size_t len = xs.size();
  const bool mine = party_ == owner;
  auto comps = [&](unsigned c) {
    std::vector<Elem> v;
    v.reserve(len);
    for (const auto& x : xs) v.push_back(x.value.component(c));
    return v;
  };
  std::vector<Elem> result;

  switch (scheme) {
    case Scheme::Additive:
    case Scheme::Xor:
    case Scheme::Shamir: {
      if (!mine) {
        net_.send(owner, msg::kOpen, elems_to_bytes(comps(0)));
        round_barrier();
        return {};
      }
      std::vector<std::vector<Elem>> per_party(cfg_.n_parties);
      per_party[owner] = comps(0);
      for (u16 i = 0; i < cfg_.n_parties; ++i) {
        if (i == owner) continue;
        per_party[i] = bytes_to_elems(net_.recv(i, msg::kOpen, deadline_), dom, len);
      }
      round_barrier();
      if (scheme == Scheme::Shamir) {
        std::vector<Elem> zs;
        for (u16 i = 0; i < cfg_.n_parties; ++i) zs.push_back(make_elem(u128(i) + 1, dom));
        for (std::size_t t = 0; t < len; ++t) {
          std::vector<std::pair<Elem, Elem>> pts;
          for (u16 i = 0; i <= cfg_.threshold; ++i) pts.emplace_back(zs[i], per_party[i][t]);
          Polynomial f = poly_interpolate(pts);
          if (cfg_.malicious()) {
            for (u16 i = u16(cfg_.threshold + 1); i < cfg_.n_parties; ++i)
              if (!(poly_eval(f, zs[i]) == per_party[i][t]))
                fail(Errc::InconsistentBroadcast, "share off the reconstruction polynomial");
          }
          result.push_back(poly_eval(f, zero(dom)));
        }
      } else {
        for (std::size_t t = 0; t < len; ++t) {
          Elem acc = zero(dom);
          for (u16 i = 0; i < cfg_.n_parties; ++i) acc = add(acc, per_party[i][t]);
          result.push_back(acc);
        }
      }
      return result;
    }
    case Scheme::Rep3: {
      const u16 next = u16((party_ + 1) % 3);
      const u16 prev = u16((party_ + 2) % 3);
      if (owner == next) net_.send(owner, msg::kOpen, elems_to_bytes(comps(0)));
      if (cfg_.malicious() && owner == prev)
        net_.send(owner, msg::kOpen, elems_to_bytes(comps(1)));
      if (!mine) {
        round_barrier();
        return {};
      }
      auto missing = bytes_to_elems(net_.recv(prev, msg::kOpen, deadline_), dom, len);
      if (cfg_.malicious()) {
        auto copy = bytes_to_elems(net_.recv(next, msg::kOpen, deadline_), dom, len);
        for (std::size_t t = 0; t < len; ++t)
          if (!(copy[t] == missing[t]))
            fail(Errc::InconsistentBroadcast, "replicated copies disagree on opening");
      }
      round_barrier();
      for (std::size_t t = 0; t < len; ++t)
        result.push_back(
            add(add(xs[t].value.component(0), xs[t].value.component(1)), missing[t]));
      return result;
    }
    case Scheme::Rep4: {
      u16 s1 = u16((owner + 1) % 4), s2 = u16((owner + 2) % 4);
      if (party_ == s1 || party_ == s2) {
        unsigned idx = owner < party_ ? owner : owner - 1;
        net_.send(owner, msg::kOpen, elems_to_bytes(comps(idx)));
      }
      if (!mine) {
        round_barrier();
        return {};
      }
      auto c1 = bytes_to_elems(net_.recv(s1, msg::kOpen, deadline_), dom, len);
      auto c2 = bytes_to_elems(net_.recv(s2, msg::kOpen, deadline_), dom, len);
      round_barrier();
      for (std::size_t t = 0; t < len; ++t) {
        if (!(c1[t] == c2[t])) fail(Errc::InconsistentBroadcast, "rep4 copies disagree");
        Elem acc = c1[t];
        for (unsigned c = 0; c < 3; ++c) acc = add(acc, xs[t].value.component(c));
        result.push_back(acc);
      }
      return result;
    }
  }
  return result;
}

std::optional<Elem> Session::open_to(u16 owner, const SVal& x) {
  auto r = open_to_vec(owner, std::span<const SVal>(&x, 1));
  if (r.empty()) return std::nullopt;
  return r.front();
}

// ----- multiplication -----

std::vector<SVal> Session::mul_beaver(std::span<const SVal> xs, std::span<const SVal> ys,
                                      std::deque<Triple>& pool, bool binary) {
  const std::size_t len = xs.size();
  if (pool.size() < len) fail(Errc::InsufficientRandomness, "triple pool exhausted");
  std::vector<Triple> ts;
  ts.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    ts.push_back(pool.front());
    pool.pop_front();
  }
  if (binary) {
    counters_.bin_triples_consumed += len;
  } else {
    counters_.triples_consumed += len;
  }
  counters_.mults_online += len;

  // Open eps = a + x and delta = b + y in one round, then combine locally:
  // z = eps*y - delta*a + c.
  std::vector<SVal> opens;
  opens.reserve(2 * len);
  for (std::size_t i = 0; i < len; ++i) opens.push_back(sval_add(ts[i].a, xs[i]));
  for (std::size_t i = 0; i < len; ++i) opens.push_back(sval_add(ts[i].b, ys[i]));
  auto opened = open_vec(opens);

  std::vector<SVal> out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const Elem& eps = opened[i];
    const Elem& delta = opened[len + i];
    SVal z = sval_add(sval_sub(sval_scale(eps, ys[i]), sval_scale(delta, ts[i].a)), ts[i].c);
    out.push_back(z);
  }
  return out;
}

std::vector<SVal> Session::mul_rep3(std::span<const SVal> xs, std::span<const SVal> ys) {
  const std::size_t len = xs.size();
  const Domain dom = xs.front().value.dom;
  auto zeros = zero_summands(len, dom);
  std::vector<Elem> mine;
  mine.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const Share& x = xs[i].value;
    const Share& y = ys[i].value;
    Elem m = add(add(mul(x.component(0), y.component(0)), mul(x.component(0), y.component(1))),
                 mul(x.component(1), y.component(0)));
    mine.push_back(add(m, zeros[i]));
  }
  const u16 next = u16((party_ + 1) % 3);
  const u16 prev = u16((party_ + 2) % 3);
  net_.send(prev, msg::kReshare, elems_to_bytes(mine));
  auto received = bytes_to_elems(net_.recv(next, msg::kReshare, deadline_), dom, len);
  round_barrier();
  counters_.mults_online += len;

  std::vector<SVal> out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    Share z = xs[i].value;
    z.set_component(0, mine[i]);
    z.set_component(1, received[i]);
    out.push_back(SVal{z, std::nullopt});
  }
  return out;
}

std::vector<SVal> Session::mul_shamir(std::span<const SVal> xs, std::span<const SVal> ys) {
  const std::size_t len = xs.size();
  const Domain dom = xs.front().value.dom;
  const u16 n = cfg_.n_parties;

  // Local degree-2t products, then re-share and recombine with Lagrange
  // coefficients at zero.
  std::vector<std::vector<Elem>> outgoing(n);
  for (u16 p = 0; p < n; ++p) outgoing[p].reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    Elem d = mul(xs[i].value.component(0), ys[i].value.component(0));
    auto sub = share_shamir(d, n, u16(cfg_.threshold + 1), private_prg_);
    for (u16 p = 0; p < n; ++p) outgoing[p].push_back(sub[p].component(0));
  }
  std::vector<std::vector<u8>> to_peers(n);
  for (u16 p = 0; p < n; ++p) to_peers[p] = elems_to_bytes(outgoing[p]);
  auto got = exchange(msg::kReshare, to_peers);
  counters_.mults_online += len;

  std::vector<std::vector<Elem>> sub_from(n);
  for (u16 p = 0; p < n; ++p)
    sub_from[p] = p == party_ ? outgoing[p] : bytes_to_elems(got[p], dom, len);

  std::vector<Elem> xs_pts;
  for (u16 i = 0; i < n; ++i) xs_pts.push_back(make_elem(u128(i) + 1, dom));
  auto lambda = lagrange_coeffs(xs_pts, zero(dom));

  std::vector<SVal> out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    Elem acc = zero(dom);
    for (u16 p = 0; p < n; ++p) acc = add(acc, mul(lambda[p], sub_from[p][i]));
    Share z = xs[i].value;
    z.set_component(0, acc);
    out.push_back(SVal{z, std::nullopt});
  }
  return out;
}

std::vector<SVal> Session::mul_rep4(std::span<const SVal> xs, std::span<const SVal> ys) {
  const std::size_t len = xs.size();
  const Domain dom = xs.front().value.dom;
  counters_.mults_online += len;

  auto summand = [&](const Share& s, u16 m) {
    unsigned idx = m < s.party ? m : m - 1;
    return s.component(idx);
  };

  // Accumulate the four output summands each party can see.
  std::vector<std::array<std::optional<Elem>, 4>> acc(len);
  auto add_into = [&](std::size_t i, u16 m, const Elem& v) {
    if (m == party_) return;
    auto& slot = acc[i][m];
    slot = slot ? add(*slot, v) : v;
  };
  auto ensure_zero = [&](std::size_t i, u16 m) {
    if (m == party_) return;
    if (!acc[i][m]) acc[i][m] = zero(dom);
  };

  // Diagonal terms x_m * y_m: non-interactive input on summand m.
  for (u16 m = 0; m < 4; ++m) {
    for (std::size_t i = 0; i < len; ++i) {
      ensure_zero(i, m);
      if (m != party_) add_into(i, m, mul(summand(xs[i].value, m), summand(ys[i].value, m)));
    }
  }

  // Cross terms per unordered pair {g,h}: known to the complement {k,l};
  // interactive input masks with K_g and sends the balancing summand to g.
  struct PairPlan {
    u16 g, h, k, l;
  };
  std::vector<PairPlan> plan;
  for (u16 g = 0; g < 4; ++g)
    for (u16 h = u16(g + 1); h < 4; ++h) {
      u16 others[2];
      int c = 0;
      for (u16 q = 0; q < 4; ++q)
        if (q != g && q != h) others[c++] = q;
      plan.push_back({g, h, others[0], others[1]});
    }

  std::vector<std::vector<Elem>> to_send(4);   // value vectors per receiver
  std::vector<std::vector<Elem>> to_hash(4);   // hash copies per receiver
  for (const auto& pp : plan) {
    const bool knower = party_ == pp.k || party_ == pp.l;
    for (std::size_t i = 0; i < len; ++i) {
      // Mask summand for pair {g,h} lives on index g via key K_g.
      if (party_ != pp.g) {
        Elem mask = sample(rep4_keys_[pp.g], dom);
        add_into(i, pp.g, mask);
        if (knower) {
          const Share& x = xs[i].value;
          const Share& y = ys[i].value;
          Elem v = add(mul(summand(x, pp.g), summand(y, pp.h)),
                       mul(summand(x, pp.h), summand(y, pp.g)));
          Elem balance = sub(v, mask);
          add_into(i, pp.h, balance);
          if (party_ == pp.k) to_send[pp.g].push_back(balance);
          if (party_ == pp.l) to_hash[pp.g].push_back(balance);
        }
      }
    }
  }

  // Verified sends: per receiver, one knower sends the concatenated values
  // (pair-major, plan order) and the other a digest of the same bytes.
  for (u16 q = 0; q < 4; ++q) {
    if (q == party_) continue;
    if (!to_send[q].empty()) net_.send(q, msg::kInput, elems_to_bytes(to_send[q]));
    if (!to_hash[q].empty()) {
      Digest d = Sha256::of(elems_to_bytes(to_hash[q]));
      net_.send(q, msg::kHashCheck, d);
    }
  }
  // Receive balancing summands for the pairs where this party is g, grouped
  // by value sender.
  std::map<const PairPlan*, std::vector<Elem>> balance_by_pair;
  for (u16 q = 0; q < 4; ++q) {
    if (q == party_) continue;
    std::vector<const PairPlan*> from_q;
    for (const auto& pp : plan)
      if (pp.g == party_ && pp.k == q) from_q.push_back(&pp);
    if (from_q.empty()) continue;
    auto bytes = net_.recv(q, msg::kInput, deadline_);
    auto vals = bytes_to_elems(bytes, dom, from_q.size() * len);
    std::size_t blk = 0;
    for (const auto* pp : from_q) {
      balance_by_pair[pp] =
          std::vector<Elem>(vals.begin() + blk * len, vals.begin() + (blk + 1) * len);
      ++blk;
    }
  }
  // Digest verification: the hash sender covered its pairs in plan order.
  for (u16 q = 0; q < 4; ++q) {
    if (q == party_) continue;
    std::vector<const PairPlan*> hashed_by_q;
    for (const auto& pp : plan)
      if (pp.g == party_ && pp.l == q) hashed_by_q.push_back(&pp);
    if (hashed_by_q.empty()) continue;
    auto digest = net_.recv(q, msg::kHashCheck, deadline_);
    std::vector<Elem> expect;
    for (const auto* pp : hashed_by_q) {
      const auto& v = balance_by_pair.at(pp);
      expect.insert(expect.end(), v.begin(), v.end());
    }
    Digest d = Sha256::of(elems_to_bytes(expect));
    if (digest.size() != d.size() || !std::equal(d.begin(), d.end(), digest.begin()))
      fail(Errc::InconsistentBroadcast, "verified send digest mismatch");
  }
  for (auto& [pp, vals] : balance_by_pair)
    for (std::size_t i = 0; i < len; ++i) add_into(i, pp->h, vals[i]);
  round_barrier();

  std::vector<SVal> out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    Share z = xs[i].value;
    unsigned c = 0;
    for (u16 m = 0; m < 4; ++m) {
      if (m == party_ || c >= 3) continue;
      z.set_component(c++, *acc[i][m]);
    }
    out.push_back(SVal{z, std::nullopt});
  }
  return out;
}

std::vector<SVal> Session::mul_vec(std::span<const SVal> xs, std::span<const SVal> ys) {
  if (xs.size() != ys.size()) fail(Errc::ParamError, "vector length mismatch");
  if (xs.empty()) return {};
  std::vector<SVal> out;
  switch (cfg_.family) {
    case Family::Semi:
    case Family::Semi2k:
    case Family::SpdzField:
    case Family::Spdz2k: out = mul_beaver(xs, ys, triples_, false); break;
    case Family::Rep3Ring:
    case Family::MalRepRing: out = mul_rep3(xs, ys); break;
    case Family::Shamir:
    case Family::MalShamir: out = mul_shamir(xs, ys); break;
    case Family::Rep4: out = mul_rep4(xs, ys); break;
    case Family::FurukawaBin:
      fail(Errc::SchemeMismatch, "binary family multiplies through and_bits");
  }
  if (cfg_.validation == Validation::Postprocess && !suppress_mult_log) {
    for (std::size_t i = 0; i < xs.size(); ++i) note_mult(xs[i], ys[i], out[i]);
  }
  return out;
}

SVal Session::mul1(const SVal& x, const SVal& y) {
  return mul_vec(std::span<const SVal>(&x, 1), std::span<const SVal>(&y, 1)).front();
}

BitVec Session::sh_and(std::span<const Share> xs, std::span<const Share> ys) {
  const std::size_t len = xs.size();
  if (len == 0) return {};
  Domain b = Domain::binary();
  auto zeros = zero_summands(len, b);
  std::vector<Elem> mine;
  mine.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    const Share& x = xs[i];
    const Share& y = ys[i];
    Elem m = add(add(mul(x.component(0), y.component(0)), mul(x.component(0), y.component(1))),
                 mul(x.component(1), y.component(0)));
    mine.push_back(add(m, zeros[i]));
  }
  const u16 next = u16((party_ + 1) % 3);
  const u16 prev = u16((party_ + 2) % 3);
  net_.send(prev, msg::kReshare, pack_bits(mine));
  auto received = unpack_bits(net_.recv(next, msg::kReshare, deadline_), len);
  round_barrier();

  BitVec out;
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    Share z = xs[i];
    z.set_component(0, mine[i]);
    z.set_component(1, received[i]);
    out.push_back(z);
  }
  return out;
}

BitVec Session::and_bits(std::span<const Share> xs, std::span<const Share> ys) {
  if (xs.size() != ys.size()) fail(Errc::ParamError, "vector length mismatch");
  if (xs.empty()) return {};
  Scheme bs = cfg_.binary_scheme();
  if (bs == Scheme::Rep3) {
    if (cfg_.family == Family::FurukawaBin && cfg_.validation != Validation::None) {
      // Beaver over XOR-replicated sharing with validated AND triples.
      std::vector<SVal> xv, yv;
      for (const auto& s : xs) xv.push_back(SVal{s, std::nullopt});
      for (const auto& s : ys) yv.push_back(SVal{s, std::nullopt});
      auto zv = mul_beaver(xv, yv, bin_triples_, true);
      BitVec out;
      for (auto& z : zv) out.push_back(z.value);
      return out;
    }
    return sh_and(xs, ys);
  }
  if (bs == Scheme::Rep4) {
    std::vector<SVal> xv, yv;
    for (const auto& s : xs) xv.push_back(SVal{s, std::nullopt});
    for (const auto& s : ys) yv.push_back(SVal{s, std::nullopt});
    auto zv = mul_rep4(xv, yv);
    BitVec out;
    for (auto& z : zv) out.push_back(z.value);
    return out;
  }
  // XOR-additive backend: Beaver with boolean triples.
  std::vector<SVal> xv, yv;
  for (const auto& s : xs) xv.push_back(SVal{s, std::nullopt});
  for (const auto& s : ys) yv.push_back(SVal{s, std::nullopt});
  auto zv = mul_beaver(xv, yv, bin_triples_, true);
  BitVec out;
  for (auto& z : zv) out.push_back(z.value);
  return out;
}

// ----- inputs -----

std::vector<SVal> Session::input_vec(u16 owner, std::span<const Elem> xs) {
  const std::size_t len = party_ == owner ? xs.size() : 0;
  // Everyone must agree on the batch size; owner's view is authoritative and
  // shipped with the w broadcast, so derive it from a size exchange first.
  std::vector<u8> size_msg(8);
  u64 sz = len;
  if (party_ == owner)
    for (int i = 0; i < 8; ++i) size_msg[i] = u8(sz >> (8 * i));
  auto size_b = broadcast(msg::kInput, party_ == owner ? std::span<const u8>(size_msg)
                                                       : std::span<const u8>());
  u64 count = 0;
  for (int i = 0; i < 8; ++i) count |= u64(size_b[owner][i]) << (8 * i);

  // Fresh random masks from the offline pool; opened to the owner only.
  std::vector<SVal> masks;
  masks.reserve(count);
  for (u64 i = 0; i < count; ++i) masks.push_back(take_random());
  std::vector<Elem> mask_vals = open_to_vec(owner, masks);

  // Owner broadcasts w = x - r; hash echo keeps the broadcast consistent.
  const Domain dom = share_dom();
  std::vector<u8> w_bytes;
  if (party_ == owner) {
    std::vector<Elem> ws;
    for (u64 i = 0; i < count; ++i) {
      Elem lifted = make_elem(xs[i].v, dom);
      ws.push_back(sub(lifted, mask_vals[i]));
    }
    w_bytes = elems_to_bytes(ws);
  }
  auto all = broadcast(msg::kInput, w_bytes);
  auto ws = bytes_to_elems(all[owner], dom, count);
  if (cfg_.malicious()) echo_check(all[owner]);

  std::vector<SVal> out;
  out.reserve(count);
  for (u64 i = 0; i < count; ++i) out.push_back(sval_add_public(masks[i], ws[i]));
  return out;
}

SVal Session::input1(u16 owner, std::optional<Elem> x) {
  std::vector<Elem> xs;
  if (x) xs.push_back(*x);
  return input_vec(owner, xs).front();
}

std::vector<BitVec> Session::input_bits(u16 owner, std::span<const Elem> xs, unsigned bits) {
  // Owner deals XOR/replicated sharings of each bit; one round of sends.
  const Scheme bs = cfg_.binary_scheme();
  const u16 n = bs == Scheme::Rep4 ? 4 : cfg_.n_parties;
  const Domain b = Domain::binary();

  std::vector<u8> size_msg(8);
  if (party_ == owner) {
    u64 sz = xs.size();
    for (int i = 0; i < 8; ++i) size_msg[i] = u8(sz >> (8 * i));
  }
  auto size_b = broadcast(msg::kInput, party_ == owner ? std::span<const u8>(size_msg)
                                                       : std::span<const u8>());
  u64 count = 0;
  for (int i = 0; i < 8; ++i) count |= u64(size_b[owner][i]) << (8 * i);

  std::vector<BitVec> out(count);
  if (party_ == owner) {
    // components per party, flattened [value][bit]
    std::vector<std::vector<Elem>> comp(n);
    std::vector<std::vector<BitVec>> all_shares(count);
    for (u64 i = 0; i < count; ++i) {
      Domain tmp = Domain::ring(u16(bits < 2 ? 2 : bits));
      auto bs_plain = bit_decompose_plain(Elem(mask192(xs[i].v, bits), tmp), bits);
      for (unsigned j = 0; j < bits; ++j) {
        auto sh = share_secret(bs, make_elem(u128(bs_plain[j]), b), n, 0, private_prg_);
        for (u16 p = 0; p < n; ++p)
          for (unsigned c = 0; c < sh[p].size(); ++c) comp[p].push_back(sh[p].component(c));
        out[i].push_back(sh[party_]);
      }
      (void)all_shares;
    }
    for (u16 p = 0; p < n; ++p) {
      if (p == party_) continue;
      net_.send(p, msg::kInput, pack_bits(comp[p]));
    }
    round_barrier();
    return out;
  }

  unsigned comps = bs == Scheme::Rep3 ? 2 : bs == Scheme::Rep4 ? 3 : 1;
  auto flat = unpack_bits(net_.recv(owner, msg::kInput, deadline_), count * bits * comps);
  round_barrier();
  std::size_t idx = 0;
  for (u64 i = 0; i < count; ++i) {
    for (unsigned j = 0; j < bits; ++j) {
      Share sh = share_of_public(zero(b), bs, party_, n);
      for (unsigned c = 0; c < sh.size(); ++c) sh.set_component(c, flat[idx++]);
      out[i].push_back(sh);
    }
  }
  return out;
}

SVal Session::rep4_input(std::span<const u16> knowers, std::optional<Elem> x) {
  const Domain dom = share_dom();
  if (knowers.size() == 3) {
    // Non-interactive: the value sits on the summand indexed by the one
    // non-knower; nothing is sent.
    u16 missing = 0;
    for (u16 q = 0; q < 4; ++q) {
      bool found = false;
      for (u16 kn : knowers) found |= kn == q;
      if (!found) missing = q;
    }
    Share sh = share_of_public(zero(dom), Scheme::Rep4, party_, 4);
    if (party_ != missing) {
      unsigned idx = missing < party_ ? missing : missing - 1;
      sh.set_component(idx, x ? *x : zero(dom));
    }
    return SVal{sh, std::nullopt};
  }
  if (knowers.size() != 2) fail(Errc::ParamError, "rep4 input needs 2 or 3 knowers");

  u16 non[2];
  int c = 0;
  for (u16 q = 0; q < 4; ++q) {
    bool found = false;
    for (u16 kn : knowers) found |= kn == q;
    if (!found) non[c++] = q;
  }
  const u16 g = non[0], h = non[1];
  const bool knower = party_ == knowers[0] || party_ == knowers[1];

  Share sh = share_of_public(zero(dom), Scheme::Rep4, party_, 4);
  std::optional<Elem> balance;
  if (party_ != g) {
    Elem mask = sample(rep4_keys_[g], dom);
    unsigned gi = g < party_ ? g : g - 1;
    sh.set_component(gi, mask);
    if (knower) balance = sub(*x, mask);
  }
  if (party_ == knowers[0]) net_.send(g, msg::kInput, elems_to_bytes({{*balance}}));
  if (party_ == knowers[1]) {
    Digest d = Sha256::of(elems_to_bytes({{*balance}}));
    net_.send(g, msg::kHashCheck, d);
  }
  if (party_ == g) {
    auto bytes = net_.recv(knowers[0], msg::kInput, deadline_);
    auto digest = net_.recv(knowers[1], msg::kHashCheck, deadline_);
    Digest d = Sha256::of(bytes);
    if (digest.size() != d.size() || !std::equal(d.begin(), d.end(), digest.begin()))
      fail(Errc::InconsistentBroadcast, "verified send digest mismatch");
    balance = bytes_to_elems(bytes, dom, 1)[0];
  }
  if (party_ != h) {
    unsigned hi = h < party_ ? h : h - 1;
    sh.set_component(hi, *balance);
  }
  round_barrier();
  return SVal{sh, std::nullopt};
}

// ----- randomness -----

std::vector<SVal> Session::random_svals(u64 count) {
  std::vector<SVal> out;
  out.reserve(count);
  const Domain dom = share_dom();
  switch (cfg_.scheme()) {
    case Scheme::Additive:
    case Scheme::Xor: {
      if (cfg_.authenticated()) {
        prep::fetch_randoms(*this, count, out);
        return out;
      }
      for (u64 i = 0; i < count; ++i) {
        Share sh = share_of_public(zero(dom), cfg_.scheme(), party_, cfg_.n_parties);
        sh.set_component(0, sample(private_prg_, dom));
        out.push_back(SVal{sh, std::nullopt});
      }
      return out;
    }
    case Scheme::Rep3: {
      for (u64 i = 0; i < count; ++i) {
        const u16 next = u16((party_ + 1) % 3);
        Elem own = sample(pair_prg_[u16((party_ + 2) % 3)], dom);
        Elem nxt = sample(pair_prg_[next], dom);
        // pair seed (i-1,i) yields component x_i, so both holders agree
        Share sh = share_of_public(zero(dom), Scheme::Rep3, party_, 3);
        sh.set_component(0, own);
        sh.set_component(1, nxt);
        out.push_back(SVal{sh, std::nullopt});
      }
      return out;
    }
    case Scheme::Rep4: {
      for (u64 i = 0; i < count; ++i) {
        Share sh = share_of_public(zero(dom), Scheme::Rep4, party_, 4);
        unsigned c = 0;
        for (u16 m = 0; m < 4; ++m) {
          if (m == party_ || c >= 3) continue;
          sh.set_component(c++, sample(rep4_keys_[m], dom));
        }
        out.push_back(SVal{sh, std::nullopt});
      }
      return out;
    }
    case Scheme::Shamir: {
      // Sum of dealings: everyone shares a fresh random value, one round.
      const u16 n = cfg_.n_parties;
      std::vector<std::vector<Elem>> outgoing(n);
      for (u64 i = 0; i < count; ++i) {
        auto sub = share_shamir(sample(private_prg_, dom), n, u16(cfg_.threshold + 1),
                                private_prg_);
        for (u16 p = 0; p < n; ++p) outgoing[p].push_back(sub[p].component(0));
      }
      std::vector<std::vector<u8>> to_peers(n);
      for (u16 p = 0; p < n; ++p) to_peers[p] = elems_to_bytes(outgoing[p]);
      auto got = exchange(msg::kReshare, to_peers);
      for (u64 i = 0; i < count; ++i) {
        Elem acc = outgoing[party_][i];
        for (u16 p = 0; p < n; ++p) {
          if (p == party_) continue;
          auto es = bytes_to_elems(got[p], dom, count);
          acc = add(acc, es[i]);
        }
        Share sh = share_of_public(zero(dom), Scheme::Shamir, party_, n);
        sh.set_component(0, acc);
        out.push_back(SVal{sh, std::nullopt});
      }
      return out;
    }
  }
  return out;
}

BitVec Session::random_bits_rep3(u64 count) {
  BitVec out;
  out.reserve(count);
  const Domain b = Domain::binary();
  for (u64 i = 0; i < count; ++i) {
    Elem own = sample(pair_prg_[u16((party_ + 2) % 3)], b);
    Elem nxt = sample(pair_prg_[u16((party_ + 1) % 3)], b);
    Share sh = share_of_public(zero(b), Scheme::Rep3, party_, 3);
    sh.set_component(0, own);
    sh.set_component(1, nxt);
    out.push_back(sh);
  }
  return out;
}

std::vector<Elem> Session::zero_summands(u64 count, const Domain& d) {
  std::vector<Elem> out;
  out.reserve(count);
  const u16 n = cfg_.n_parties;
  const u16 next = u16((party_ + 1) % n);
  const u16 prev = u16((party_ + n - 1) % n);
  for (u64 i = 0; i < count; ++i) {
    Elem a = sample(pair_prg_[next], d);
    Elem b = sample(pair_prg_[prev], d);
    out.push_back(sub(a, b));
  }
  return out;
}

// ----- pools -----

Triple Session::take_triple() {
  if (triples_.empty()) fail(Errc::InsufficientRandomness, "triple pool exhausted");
  Triple t = triples_.front();
  triples_.pop_front();
  counters_.triples_consumed++;
  return t;
}

Triple Session::take_bin_triple() {
  if (bin_triples_.empty()) fail(Errc::InsufficientRandomness, "binary triple pool exhausted");
  Triple t = bin_triples_.front();
  bin_triples_.pop_front();
  counters_.bin_triples_consumed++;
  return t;
}

DaBit Session::take_dabit() {
  if (dabits_.empty()) fail(Errc::InsufficientRandomness, "daBit pool exhausted");
  DaBit d = dabits_.front();
  dabits_.pop_front();
  counters_.dabits_consumed++;
  return d;
}

EdaBit Session::take_edabit() {
  if (edabits_.empty()) fail(Errc::InsufficientRandomness, "edaBit pool exhausted");
  EdaBit e = edabits_.front();
  edabits_.pop_front();
  counters_.edabits_consumed++;
  return e;
}

SVal Session::take_arith_bit() {
  if (arith_bits_.empty()) fail(Errc::InsufficientRandomness, "arith bit pool exhausted");
  SVal v = arith_bits_.front();
  arith_bits_.pop_front();
  return v;
}

SVal Session::take_random() {
  if (random_pool_.empty()) fail(Errc::InsufficientRandomness, "random sharing pool exhausted");
  SVal v = random_pool_.front();
  random_pool_.pop_front();
  return v;
}

void Session::preprocess(const PrepBudget& budget) { prep::fill_pools(*this, budget); }

// ----- validation -----

void Session::note_mult(const SVal& x, const SVal& y, const SVal& z) {
  mult_log_.push_back({x, y, z});
}

void Session::accumulate_mac(const Elem& opened, const Share& mac_share) {
  mac_opened_.push_back(opened);
  mac_shares_.push_back(mac_share.component(0));
}

void Session::run_validation() {
  if (cfg_.validation == Validation::Postprocess && !mult_log_.empty()) {
    prep::postprocess_check(*this, mult_log_);
    mult_log_.clear();
  }
  if (cfg_.authenticated() && !mac_opened_.empty()) {
    // Distributed batch MAC check: commit to d_i, reveal, require sum zero.
    Prg coeffs = joint_prg_->fork("mac-batch");
    Elem d = mac_check_local(mac_opened_, mac_shares_, mac_key_.front(), coeffs);
    std::array<u8, 32> blind;
    private_prg_.fill(blind);
    std::vector<u8> reveal = elems_to_bytes({{d}});
    reveal.insert(reveal.end(), blind.begin(), blind.end());
    Digest commit = Sha256::of(reveal);
    auto commits = broadcast(msg::kCommit, commit);
    auto reveals = broadcast(msg::kReveal, reveal);
    Elem total = zero(d.dom);
    for (u16 p = 0; p < cfg_.n_parties; ++p) {
      Digest check = Sha256::of(reveals[p]);
      if (reveals[p].size() != reveal.size() ||
          !std::equal(check.begin(), check.end(), commits[p].begin()))
        fail(Errc::InconsistentBroadcast, "MAC check commitment mismatch");
      std::size_t off = 0;
      total = add(total, read_elem(reveals[p], off, d.dom));
    }
    if (!total.is_zero()) fail(Errc::Abort, "MAC check failed");
    mac_opened_.clear();
    mac_shares_.clear();
  }
}

// ----- dealer conversation -----

void Session::dealer_request(std::span<const u8> request) {
  net_.send(dealer_id(), msg::kPrepRequest, request);
  counters_.dealer_requests++;
}

std::vector<u8> Session::dealer_response() {
  return net_.recv(dealer_id(), msg::kPrepData, deadline_);
}

// ---------------------------------------------------------------------------
// Party runner
// ---------------------------------------------------------------------------

PartyRun run_parties(const ProtocolConfig& cfg, u64 run_seed,
                     const std::function<void(Session&)>& program, BandwidthCap cap) {
  cfg.validate();
  const u16 n = cfg.n_parties;
  const bool dealer = cfg.has_dealer();
  const u16 endpoints = u16(n + (dealer ? 1 : 0));

  MemHub hub(endpoints, cap);
  std::vector<std::exception_ptr> errors(endpoints);
  std::vector<SessionCounters> counters(n);
  std::vector<std::thread> threads;

  auto t0 = Clock::now();
  for (u16 p = 0; p < n; ++p) {
    threads.emplace_back([&, p] {
      try {
        Session session(cfg, hub.net(p), run_seed);
        session.setup();
        program(session);
        session.finish();
        counters[p] = session.counters();
      } catch (...) {
        errors[p] = std::current_exception();
      }
      hub.close_outbound(p);
    });
  }
  if (dealer) {
    threads.emplace_back([&] {
      try {
        dealer_main(cfg, hub.net(u16(n)), run_seed);
      } catch (const Error&) {
        // Torn-down channels during abort are expected here.
      } catch (...) {
        errors[n] = std::current_exception();
      }
      hub.close_outbound(u16(n));
    });
  }
  for (auto& t : threads) t.join();
  double wall = std::chrono::duration<double>(Clock::now() - t0).count();

  // Prefer protocol-level failures over secondary transport fallout.
  std::exception_ptr first;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      if (err.code() == Errc::Abort || err.code() == Errc::InconsistentBroadcast ||
          err.code() == Errc::InconsistentReplicas) {
        std::rethrow_exception(e);
      }
      if (!first) first = e;
    } catch (...) {
      if (!first) first = e;
    }
  }
  if (first) std::rethrow_exception(first);

  PartyRun result;
  result.stats = hub.harvest();
  result.counters = std::move(counters);
  result.wall_seconds = wall;
  return result;
}

}  // namespace mpcforge
