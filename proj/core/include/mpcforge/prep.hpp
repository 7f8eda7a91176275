#ifndef MPCFORGE_PREP_HPP
#define MPCFORGE_PREP_HPP

#include <functional>
#include <optional>

#include "mpcforge/engine.hpp"

namespace mpcforge::prep {

// ---------------------------------------------------------------------------
// Dealer-side generation (global view). The trusted dealer is harness-level
// machinery: it creates correlated randomness it knows anyway and ships the
// shares through the transport so preprocessing bytes are accounted for.
// ---------------------------------------------------------------------------

struct DealerContext {
  Scheme scheme;
  u16 n;
  u16 quorum;  // Shamir reconstruction quorum, ignored otherwise
  Domain dom;
  std::vector<MacKeyShare> keys;  // empty when unauthenticated
};

// Party-major lists of correlated randomness.
std::vector<std::vector<Triple>> dealer_make_triples(const DealerContext& ctx, u64 count,
                                                     Prg& prg);
std::vector<std::vector<DaBit>> dealer_make_dabits(const DealerContext& arith, Scheme bin_scheme,
                                                   u16 bin_n, u64 count, Prg& prg);
std::vector<std::vector<EdaBit>> dealer_make_edabits(const DealerContext& arith, Scheme bin_scheme,
                                                     u16 bin_n, u64 count, unsigned m, Prg& prg);
std::vector<std::vector<SVal>> dealer_make_bit_svals(const DealerContext& ctx, u64 count,
                                                     Prg& prg);
std::vector<std::vector<SVal>> dealer_make_randoms(const DealerContext& ctx, u64 count, Prg& prg);

// ---------------------------------------------------------------------------
// Party-side preprocessing protocols.
// ---------------------------------------------------------------------------

// Pairwise OT-based semi-honest triple generation (MASCOT-style cross terms
// over an ideal OT that ships both messages through the transport but exposes
// only the chosen one to the receiver; the choice never leaves the receiver).
std::vector<Triple> gen_triples_ot(Session& s, u64 count, const Domain& dom, Scheme scheme);

// Semi-honest Furukawa AND triples over replicated binary sharing.
std::vector<Triple> furukawa_semi_triples(Session& s, u64 count);

// Bucket cut-and-choose on top of a semi-honest triple source.
struct BucketParams {
  u64 n_out = 0;  // N
  u32 buckets = 2;  // B
  u32 opened_per_subarray = 1;  // C
  u32 subarrays = 1;  // L
};
struct BucketResult {
  std::vector<Triple> triples;
  u64 sharings_requested = 0;
};
using TripleSource = std::function<std::vector<Triple>(u64)>;
using CorruptHook = std::function<void(std::vector<Triple>&)>;
// `forced_perms`, when given, supplies the within-subarray permutations and
// then the subarray order permutation instead of the joint PRG (test control).
BucketResult bucket_cut_and_choose(Session& s, const BucketParams& p, const TripleSource& source,
                                   const CorruptHook& corrupt = {},
                                   const std::vector<std::vector<u32>>* forced_perms = nullptr);

// Furukawa generation composed with bucketing (malicious setting).
std::vector<Triple> furukawa_triple_gen(Session& s, u64 count, const CorruptHook& corrupt = {});

// ---------------------------------------------------------------------------
// Validation. All of these throw Abort on rejection.
// ---------------------------------------------------------------------------

// Field triple validation against one auxiliary triple per target. The
// batching coefficients and the final mask are public nonzero values from the
// joint PRG, which keeps the advertised 1 - 1/|F| detection exact.
void sacrifice_check(Session& s, std::span<const Triple> targets, std::span<const Triple> aux);

// Polynomial batch check: interpolate f, g through the triple factors and
// test f*g against h at a random point (ParamError when p <= 2N-1).
void batch_poly_check(Session& s, std::span<const Triple> triples,
                      std::optional<Elem> forced_point = std::nullopt);

// Single-triple check in the extended ring Z_2^(k+lambda).
void ring_triple_check(Session& s, const Triple& target, const Triple& aux);
void ring_triple_check_vec(Session& s, std::span<const Triple> targets,
                           std::span<const Triple> aux);

// End-of-circuit validation of the multiplication log (ring check on rings,
// sacrifice on fields), consuming freshly generated auxiliaries.
void postprocess_check(Session& s, std::span<const std::array<SVal, 3>> log);

// ---------------------------------------------------------------------------
// Pool filling and dealer conversation.
// ---------------------------------------------------------------------------

void fill_pools(Session& s, const PrepBudget& budget);
void fetch_mac_key(Session& s, std::vector<MacKeyShare>& out);
void fetch_randoms(Session& s, u64 count, std::vector<SVal>& out);

// daBit / edaBit generation: dealer material plus an opened-sample spot check.
void gen_dabits(Session& s, u64 count, std::deque<DaBit>& out);
void gen_edabits(Session& s, u64 count, unsigned m, std::deque<EdaBit>& out);

// Consistent additive error on a reconstructed triple component across the
// whole party set (fault injection for tests).
enum class TripleLeg { A, B, C };
void corrupt_triple(std::vector<Triple*> per_party, TripleLeg leg, const Elem& delta);

// Triple pool persistence: header (domain, count, flags), then fixed-width
// records of one party's shares.
void save_triples(const std::string& path, const ProtocolConfig& cfg,
                  std::span<const Triple> triples);
std::vector<Triple> load_triples(const std::string& path, const ProtocolConfig& cfg);

}  // namespace mpcforge::prep

#endif
