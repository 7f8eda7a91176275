#ifndef MPCFORGE_ENGINE_HPP
#define MPCFORGE_ENGINE_HPP

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpcforge/auth.hpp"
#include "mpcforge/sharing.hpp"
#include "mpcforge/transport.hpp"

namespace mpcforge {

enum class Family : u8 {
  Semi,        // additive, prime field, semi-honest
  Semi2k,      // additive, Z_2^k, semi-honest
  Rep3Ring,    // replicated 3-party ring, semi-honest
  MalRepRing,  // replicated 3-party ring, malicious (postprocessed checks)
  SpdzField,   // additive + field MACs, malicious
  Spdz2k,      // additive + ring MACs in Z_2^(k+s), malicious
  Shamir,      // Shamir honest majority, semi-honest
  MalShamir,   // Shamir honest majority, malicious
  Rep4,        // 4-party 3-of-4 replicated ring, malicious
  FurukawaBin  // 3-party replicated binary, semi-honest AND or validated triples
};

enum class Validation : u8 { None, Sacrifice, BatchPoly, RingCheck, Postprocess, BucketCnc };
enum class ConversionMode : u8 { Local, Dabit, Edabit, Off };

const char* family_name(Family f);
const char* validation_name(Validation v);
const char* conversion_name(ConversionMode c);
Family family_from_string(const std::string& s);
Validation validation_from_string(const std::string& s);
ConversionMode conversion_from_string(const std::string& s);

struct ProtocolConfig {
  Family family = Family::Rep3Ring;
  u16 n_parties = 3;
  Domain domain = Domain::ring(64);
  Validation validation = Validation::None;
  ConversionMode conversion = ConversionMode::Local;
  u16 threshold = 1;        // Shamir corruption threshold t, n >= 2t+1
  unsigned value_bits = 32; // width of benchmark integers (<= domain capacity)
  u64 seed = 1;
  double timeout_s = 600.0;

  static ProtocolConfig defaults_for(Family f, u16 n_parties, const Domain& d);
  void validate() const;

  Scheme scheme() const;         // arithmetic sharing scheme
  Scheme binary_scheme() const;  // scheme used for the boolean side
  bool authenticated() const { return family == Family::SpdzField || family == Family::Spdz2k; }
  bool malicious() const;
  bool has_dealer() const;  // whether a trusted-dealer endpoint takes part
  bool uses_beaver() const;
  // Shares may be carried in an extension of the nominal domain (ring MACs,
  // postprocessed ring checks, masked ring input).
  Domain share_domain() const;
  u16 ring_lambda() const;  // extension bits for MalRepRing checks

  // key=value config file round trip
  std::string serialize() const;
  static ProtocolConfig parse(const std::string& text);

  std::map<std::string, std::string> echo() const;
};

// One party's handle on a secret value: a share plus, for authenticated
// families, the MAC tag share.
struct SVal {
  Share value;
  std::optional<Share> mac;
};

struct Triple {
  SVal a, b, c;
};

struct DaBit {
  SVal arith;
  Share bin;
};

struct EdaBit {
  SVal arith;
  std::vector<Share> bits;
};

// Bit vector in the boolean side of a protocol (one Share per bit).
using BitVec = std::vector<Share>;

// Offline-phase material a program needs; filled before inputs exist.
struct PrepBudget {
  u64 triples = 0;       // arithmetic Beaver triples
  u64 bin_triples = 0;   // boolean AND triples (additive-xor backends)
  u64 dabits = 0;
  u64 edabits = 0;
  unsigned edabit_bits = 0;
  u64 arith_bits = 0;     // random bits shared in the arithmetic domain
  u64 random_vals = 0;    // random sharings (input masks, checks)

  PrepBudget& operator+=(const PrepBudget& o);
  PrepBudget scaled(u64 factor) const;
};

struct SessionCounters {
  u64 rounds = 0;
  u64 triples_consumed = 0;
  u64 bin_triples_consumed = 0;
  u64 dabits_consumed = 0;
  u64 edabits_consumed = 0;
  u64 mults_online = 0;
  u64 dealer_requests = 0;
};

// Message type tags on the wire.
namespace msg {
constexpr u8 kOpen = 1;
constexpr u8 kEcho = 2;
constexpr u8 kReshare = 3;
constexpr u8 kInput = 4;
constexpr u8 kCommit = 5;
constexpr u8 kReveal = 6;
constexpr u8 kOt = 7;
constexpr u8 kOtCorrection = 8;
constexpr u8 kPrepRequest = 9;
constexpr u8 kPrepData = 10;
constexpr u8 kHashCheck = 11;
constexpr u8 kSync = 12;
constexpr u8 kShutdown = 13;
}  // namespace msg

class Session {
 public:
  Session(const ProtocolConfig& cfg, Net& net, u64 run_seed);

  // Pairwise seed exchange, joint-PRG commit/reveal, replicated keys.
  void setup();
  // Signals the dealer (if any) that this party is done.
  void finish();

  const ProtocolConfig& cfg() const { return cfg_; }
  u16 party() const { return party_; }
  u16 n() const { return cfg_.n_parties; }
  Net& net() { return net_; }
  Deadline deadline() const { return deadline_; }
  Prg& joint_prg() { return *joint_prg_; }
  Prg& private_prg() { return private_prg_; }
  SessionCounters& counters() { return counters_; }
  const std::vector<MacKeyShare>& mac_key() const { return mac_key_; }
  bool has_mac() const { return !mac_key_.empty(); }
  Domain share_dom() const { return cfg_.share_domain(); }
  Domain bin_dom() const { return Domain::binary(); }

  // ----- linear layer -----
  SVal from_public(const Elem& c) const;
  Share bin_from_public(const Elem& bit) const;
  SVal sval_add(const SVal& a, const SVal& b) const;
  SVal sval_sub(const SVal& a, const SVal& b) const;
  SVal sval_scale(const Elem& c, const SVal& a) const;
  SVal sval_add_public(const SVal& a, const Elem& w) const;

  // ----- openings -----
  // Batched opening; one round, plus an echo round for malicious families.
  // Authenticated openings are recorded in the MAC accumulator.
  std::vector<Elem> open_vec(std::span<const SVal> xs);
  Elem open1(const SVal& x);
  // Boolean-side opening with bit-packed payloads.
  std::vector<Elem> open_bits(std::span<const Share> bits);
  // Reconstruct values to one party only (input masking). Non-owners get an
  // empty vector back.
  std::vector<Elem> open_to_vec(u16 owner, std::span<const SVal> xs);
  std::optional<Elem> open_to(u16 owner, const SVal& x);

  // ----- multiplication -----
  std::vector<SVal> mul_vec(std::span<const SVal> xs, std::span<const SVal> ys);
  SVal mul1(const SVal& x, const SVal& y);
  // Boolean AND on the binary side (sh_and for replicated, Beaver otherwise).
  BitVec and_bits(std::span<const Share> xs, std::span<const Share> ys);
  // Three-party replicated semi-honest AND (used directly and by triple gen).
  BitVec sh_and(std::span<const Share> xs, std::span<const Share> ys);

  // ----- inputs -----
  // Masked secure input; x supplied by `owner` only. Broadcast consistency is
  // enforced with a hash echo for malicious families.
  std::vector<SVal> input_vec(u16 owner, std::span<const Elem> xs);
  SVal input1(u16 owner, std::optional<Elem> x);
  std::vector<BitVec> input_bits(u16 owner, std::span<const Elem> xs, unsigned bits);
  // 4-party sharing of a value known to 2 or 3 parties.
  SVal rep4_input(std::span<const u16> knowers, std::optional<Elem> x);

  // ----- randomness -----
  // Random sharing unknown to every party (local for additive/replicated,
  // one round of summed dealings for Shamir, dealer for authenticated).
  std::vector<SVal> random_svals(u64 count);
  // Random replicated binary sharings derived from pairwise seeds.
  BitVec random_bits_rep3(u64 count);
  // Correlated zero sharing (sum over parties = 0), from pairwise seeds.
  std::vector<Elem> zero_summands(u64 count, const Domain& d);

  // ----- preprocessing pools -----
  std::deque<Triple>& triple_pool() { return triples_; }
  std::deque<Triple>& bin_triple_pool() { return bin_triples_; }
  std::deque<DaBit>& dabit_pool() { return dabits_; }
  std::deque<EdaBit>& edabit_pool() { return edabits_; }
  std::deque<SVal>& arith_bit_pool() { return arith_bits_; }
  Triple take_triple();
  Triple take_bin_triple();
  DaBit take_dabit();
  EdaBit take_edabit();
  SVal take_arith_bit();
  std::deque<SVal>& random_pool() { return random_pool_; }
  SVal take_random();

  // Fill pools for the given budget (dispatches per family/config).
  void preprocess(const PrepBudget& budget);

  // ----- validation & MAC accounting -----
  void note_mult(const SVal& x, const SVal& y, const SVal& z);
  bool suppress_mult_log = false;
  std::vector<std::array<SVal, 3>>& mult_log() { return mult_log_; }
  void accumulate_mac(const Elem& opened, const Share& mac_share);
  // End-of-run validation: dispatches to the configured check and the batch
  // MAC check; throws Abort on failure.
  void run_validation();

  // ----- low-level exchange helpers (also used by preprocessing) -----
  void round_barrier() { ++counters_.rounds; }
  // Symmetric all-to-all exchange of one payload per peer; counts one round.
  std::vector<std::vector<u8>> exchange(u8 type, const std::vector<std::vector<u8>>& to_peers);
  // Broadcast the same payload; returns everyone's payloads (own included).
  std::vector<std::vector<u8>> broadcast(u8 type, std::span<const u8> payload);
  void echo_check(std::span<const u8> canonical);

  // Dealer conversation (endpoint n_parties when configured).
  u16 dealer_id() const { return cfg_.n_parties; }
  void dealer_request(std::span<const u8> request);
  std::vector<u8> dealer_response();

  // Test hook: flip one byte in the next broadcast payload sent to the
  // highest-id peer, simulating an inconsistent sender.
  bool tamper_next_broadcast = false;

 private:
  friend struct SessionTestAccess;
  friend struct PrepAccess;
  std::vector<Elem> open_shares(std::span<const Share> shares, bool packed_bits);
  std::vector<SVal> mul_beaver(std::span<const SVal> xs, std::span<const SVal> ys,
                               std::deque<Triple>& pool, bool binary);
  std::vector<SVal> mul_rep3(std::span<const SVal> xs, std::span<const SVal> ys);
  std::vector<SVal> mul_shamir(std::span<const SVal> xs, std::span<const SVal> ys);
  std::vector<SVal> mul_rep4(std::span<const SVal> xs, std::span<const SVal> ys);
  std::vector<Elem> open_rep4_summand(std::span<const Elem> own);

  ProtocolConfig cfg_;
  Net& net_;
  u16 party_;
  Deadline deadline_;
  Prg private_prg_;
  std::optional<Prg> joint_prg_;
  std::vector<Prg> pair_prg_;      // seed shared with each peer
  std::vector<Prg> rep4_keys_;     // K_m, m-th entry unusable for party m
  std::vector<MacKeyShare> mac_key_;
  SessionCounters counters_;

  std::deque<Triple> triples_;
  std::deque<Triple> bin_triples_;
  std::deque<DaBit> dabits_;
  std::deque<EdaBit> edabits_;
  std::deque<SVal> arith_bits_;
  std::deque<SVal> random_pool_;
  std::vector<std::array<SVal, 3>> mult_log_;
  std::vector<OpenedValue> mac_acc_;  // per-party view: value + own mac share
  std::vector<Elem> mac_opened_;
  std::vector<Elem> mac_shares_;
};

// Runs one function per party over an in-process hub (plus a dealer endpoint
// when the config needs one); joins all threads, closes a party's outbound
// channels when it exits so peers fail fast, and rethrows the first error.
struct PartyRun {
  MeshStats stats;
  std::vector<SessionCounters> counters;
  double wall_seconds = 0;
};
PartyRun run_parties(const ProtocolConfig& cfg, u64 run_seed,
                     const std::function<void(Session&)>& program,
                     BandwidthCap cap = BandwidthCap::unlimited());

// Trusted dealer endpoint loop (correlated randomness over the transport).
void dealer_main(const ProtocolConfig& cfg, Net& net, u64 run_seed);

}  // namespace mpcforge

#endif
