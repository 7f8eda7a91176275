#ifndef MPCFORGE_PRG_HPP
#define MPCFORGE_PRG_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpcforge/wide.hpp"

namespace mpcforge {

// Deterministic ChaCha20-based generator in counter mode. Everything random in
// the framework flows from one of these, so a fixed seed pins the whole run.
class Prg {
 public:
  explicit Prg(std::span<const u8> seed);
  explicit Prg(const std::string& seed);
  explicit Prg(u64 seed);

  // Independent child stream; same (parent seed, label) gives the same child.
  Prg fork(const std::string& label) const;

  void fill(std::span<u8> out);
  u8 next_u8();
  u64 next_u64();
  u128 next_u128();
  U192 next_bits(unsigned bits);

  // Uniform in [0, bound), bound > 0.
  u64 below(u64 bound);

  // Fisher-Yates permutation of [0, n).
  std::vector<u32> permutation(u32 n);

  const std::array<u8, 32>& key() const { return key_; }

 private:
  void refill();
  std::array<u8, 32> key_;
  u64 counter_ = 0;
  std::array<u8, 64> block_;
  unsigned used_ = 64;
};

}  // namespace mpcforge

#endif
