#include "mpcforge/transport.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <sstream>
#include <thread>

namespace mpcforge {

std::vector<u8> encode_frame(u8 type, std::span<const u8> payload) {
  std::vector<u8> out;
  out.reserve(kFrameOverhead + payload.size());
  u32 len = u32(payload.size());
  out.push_back(u8(len >> 24));
  out.push_back(u8(len >> 16));
  out.push_back(u8(len >> 8));
  out.push_back(u8(len));
  out.push_back(type);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

BandwidthCap BandwidthCap::gbps(double g) {
  BandwidthCap c;
  c.rate_bps = u64(g * 1e9);
  return c;
}

BandwidthCap BandwidthCap::parse(const std::string& text) {
  if (text == "unlimited" || text.empty()) return unlimited();
  if (text == "1g") return gbps(1);
  if (text == "5g") return gbps(5);
  if (text == "10g") return gbps(10);
  if (text == "20g") return gbps(20);
  try {
    std::size_t pos = 0;
    u64 v = std::stoull(text, &pos);
    if (pos == text.size() && v > 0) {
      BandwidthCap c;
      c.rate_bps = v;
      return c;
    }
  } catch (...) {
  }
  fail(Errc::ParamError, "unrecognized bandwidth cap: " + text);
}

void BandwidthCap::validate() const {
  if (rate_bps != 0 && burst_bytes < kFrameOverhead)
    fail(Errc::ParamError, "burst smaller than one frame");
}

std::string BandwidthCap::to_string() const {
  if (rate_bps == 0) return "unlimited";
  std::ostringstream os;
  if (rate_bps % 1000000000 == 0) {
    os << rate_bps / 1000000000 << "g";
  } else {
    os << rate_bps;
  }
  return os.str();
}

TokenBucket::TokenBucket(BandwidthCap cap) : cap_(cap), tokens_(double(cap.burst_bytes)) {
  cap_.validate();
  last_ = Clock::now();
}

void TokenBucket::acquire(u64 bytes) {
  if (cap_.rate_bps == 0) return;
  double remaining = double(bytes);
  const double rate_Bps = double(cap_.rate_bps) / 8.0;
  while (remaining > 0) {
    auto now = Clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(double(cap_.burst_bytes), tokens_ + elapsed * rate_Bps);
    if (tokens_ >= remaining) {
      tokens_ -= remaining;
      return;
    }
    remaining -= tokens_;
    tokens_ = 0;
    std::this_thread::sleep_for(std::chrono::duration<double>(remaining / rate_Bps));
  }
}

std::vector<u8> Net::recv(u16 peer, u8 expected_type, Deadline deadline) {
  Frame f = from(peer).recv(deadline);
  if (f.type != expected_type)
    fail(Errc::TransportFailure, "unexpected message type from peer " + std::to_string(peer));
  return std::move(f.payload);
}

u64 MeshStats::global_bytes() const {
  u64 total = 0;
  for (const auto& c : pair) total += c.bytes;
  return total;
}

u64 MeshStats::sent_by(u16 party) const {
  u64 total = 0;
  for (u16 j = 0; j < endpoints; ++j) total += at(party, j).bytes;
  return total;
}

namespace {

class MemChannel final : public Channel {
 public:
  explicit MemChannel(BandwidthCap cap) : bucket_(cap) {}

  void send(u8 type, std::span<const u8> payload) override {
    u64 framed = kFrameOverhead + payload.size();
    bucket_.acquire(framed);
    {
      std::lock_guard lock(m_);
      if (closed_) fail(Errc::TransportFailure, "send on closed channel");
      q_.push_back(Frame{type, std::vector<u8>(payload.begin(), payload.end())});
      stats_.bytes += framed;
      stats_.frames.push_back(u32(framed));
    }
    cv_.notify_one();
  }

  Frame recv(Deadline deadline) override {
    std::unique_lock lock(m_);
    if (!cv_.wait_until(lock, deadline, [&] { return !q_.empty() || closed_; }))
      fail(Errc::Timeout, "recv timed out");
    if (q_.empty() && closed_) fail(Errc::TransportFailure, "recv on closed channel");
    Frame f = std::move(q_.front());
    q_.pop_front();
    return f;
  }

  void close() override {
    {
      std::lock_guard lock(m_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  const ChannelStats& stats() const override { return stats_; }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::deque<Frame> q_;
  bool closed_ = false;
  TokenBucket bucket_;
  ChannelStats stats_;
};

class MemNet final : public Net {
 public:
  MemNet(u16 id, u16 endpoints, std::vector<std::shared_ptr<MemChannel>>* grid)
      : id_(id), endpoints_(endpoints), grid_(grid) {}
  u16 id() const override { return id_; }
  u16 endpoints() const override { return endpoints_; }
  Channel& to(u16 peer) override { return *(*grid_)[id_ * endpoints_ + peer]; }
  Channel& from(u16 peer) override { return *(*grid_)[peer * endpoints_ + id_]; }

 private:
  u16 id_;
  u16 endpoints_;
  std::vector<std::shared_ptr<MemChannel>>* grid_;
};

}  // namespace

struct MemHub::Impl {
  u16 endpoints;
  std::vector<std::shared_ptr<MemChannel>> grid;
  std::vector<std::unique_ptr<MemNet>> nets;
};

MemHub::MemHub(u16 endpoints, BandwidthCap cap) : impl_(new Impl) {
  cap.validate();
  impl_->endpoints = endpoints;
  impl_->grid.resize(std::size_t(endpoints) * endpoints);
  for (auto& c : impl_->grid) c = std::make_shared<MemChannel>(cap);
  for (u16 i = 0; i < endpoints; ++i)
    impl_->nets.push_back(std::make_unique<MemNet>(i, endpoints, &impl_->grid));
}

MemHub::~MemHub() = default;

Net& MemHub::net(u16 id) { return *impl_->nets.at(id); }

MeshStats MemHub::harvest() const {
  MeshStats ms;
  ms.endpoints = impl_->endpoints;
  ms.pair.reserve(impl_->grid.size());
  for (const auto& c : impl_->grid) ms.pair.push_back(c->stats());
  return ms;
}

void MemHub::close_all() {
  for (auto& c : impl_->grid) c->close();
}

void MemHub::close_outbound(u16 id) {
  for (u16 j = 0; j < impl_->endpoints; ++j) impl_->grid[id * impl_->endpoints + j]->close();
}

}  // namespace mpcforge
