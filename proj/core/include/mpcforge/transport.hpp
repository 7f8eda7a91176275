#ifndef MPCFORGE_TRANSPORT_HPP
#define MPCFORGE_TRANSPORT_HPP

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpcforge/errors.hpp"
#include "mpcforge/wide.hpp"

namespace mpcforge {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

inline Deadline deadline_in(double seconds) {
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double>(seconds));
}

// Wire frame: 4-byte big-endian payload length, 1-byte message type, payload.
// Every counter in the framework measures framed size, i.e. 5 + payload bytes,
// so byte accounting is identical across backends.
constexpr std::size_t kFrameOverhead = 5;

struct Frame {
  u8 type = 0;
  std::vector<u8> payload;
};

std::vector<u8> encode_frame(u8 type, std::span<const u8> payload);

struct BandwidthCap {
  u64 rate_bps = 0;  // 0 = unlimited
  u64 burst_bytes = 1 << 17;

  static BandwidthCap unlimited() { return {}; }
  static BandwidthCap gbps(double g);
  // Accepts "1g", "5g", "10g", "20g", "unlimited" or a raw bits/second count.
  static BandwidthCap parse(const std::string& text);
  void validate() const;
  std::string to_string() const;
};

// Token bucket pacing one directed link; single-threaded use by the sender.
class TokenBucket {
 public:
  explicit TokenBucket(BandwidthCap cap);
  void acquire(u64 bytes);

 private:
  BandwidthCap cap_;
  double tokens_;
  Clock::time_point last_;
};

// Per directed channel accounting. `frames` keeps the framed size of every
// send in order; two runs with the same shape must produce identical
// sequences for the obliviousness check.
struct ChannelStats {
  u64 bytes = 0;
  std::vector<u32> frames;
};

class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(u8 type, std::span<const u8> payload) = 0;
  virtual Frame recv(Deadline deadline) = 0;
  virtual void close() = 0;
  virtual const ChannelStats& stats() const = 0;
};

// One endpoint of a fully connected mesh. Endpoint ids 0..n-1 are parties; a
// trusted dealer, when present, occupies the last id.
class Net {
 public:
  virtual ~Net() = default;
  virtual u16 id() const = 0;
  virtual u16 endpoints() const = 0;

  virtual Channel& to(u16 peer) = 0;
  virtual Channel& from(u16 peer) = 0;

  void send(u16 peer, u8 type, std::span<const u8> payload) { to(peer).send(type, payload); }
  std::vector<u8> recv(u16 peer, u8 expected_type, Deadline deadline);
};

// Whole-mesh view harvested after a run.
struct MeshStats {
  u16 endpoints = 0;
  std::vector<ChannelStats> pair;  // [from * endpoints + to]
  u64 global_bytes() const;
  u64 sent_by(u16 party) const;
  const ChannelStats& at(u16 from, u16 to) const { return pair[from * endpoints + to]; }
};

// In-process backend: unbounded SPSC queues per directed pair.
class MemHub {
 public:
  MemHub(u16 endpoints, BandwidthCap cap);
  ~MemHub();
  Net& net(u16 id);
  MeshStats harvest() const;
  void close_all();
  // Closes every channel whose sender is `id`; used at party teardown so
  // peers blocked on recv fail fast instead of waiting for the deadline.
  void close_outbound(u16 id);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// TCP backend: one process per party, loopback mesh by default.
struct TcpEndpoint {
  std::string host = "127.0.0.1";
  u16 port = 0;
};

class TcpMesh {
 public:
  // Blocks until the full mesh is connected.
  TcpMesh(u16 my_id, const std::vector<TcpEndpoint>& endpoints, BandwidthCap cap,
          double connect_timeout_s = 20.0);
  ~TcpMesh();
  Net& net();
  MeshStats harvest() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mpcforge

#endif
