#ifndef MPCFORGE_DIGEST_HPP
#define MPCFORGE_DIGEST_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpcforge {

using Digest = std::array<std::uint8_t, 32>;

// Incremental SHA-256. Used for broadcast echo checks, commitments and seed
// derivation; no external dependency wanted for those.
class Sha256 {
 public:
  Sha256();
  void update(std::span<const std::uint8_t> data);
  void update(const std::string& s);
  Digest finish();

  static Digest of(std::span<const std::uint8_t> data);
  static Digest of(const std::string& s);

 private:
  void compress(const std::uint8_t* block);
  std::uint32_t state_[8];
  std::uint64_t length_ = 0;
  std::uint8_t buf_[64];
  std::size_t buffered_ = 0;
};

}  // namespace mpcforge

#endif
