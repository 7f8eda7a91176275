#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "mpcforge/transport.hpp"

namespace mpcforge {

namespace {

void write_all(int fd, const u8* data, std::size_t n) {
  while (n > 0) {
    ssize_t w = ::write(fd, data, n);
    if (w <= 0) {
      if (w < 0 && errno == EINTR) continue;
      fail(Errc::TransportFailure, "socket write failed");
    }
    data += w;
    n -= std::size_t(w);
  }
}

bool read_all(int fd, u8* data, std::size_t n) {
  while (n > 0) {
    ssize_t r = ::read(fd, data, n);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += r;
    n -= std::size_t(r);
  }
  return true;
}

struct Inbox {
  std::mutex m;
  std::condition_variable cv;
  std::deque<Frame> q;
  bool closed = false;

  void push(Frame f) {
    {
      std::lock_guard lock(m);
      q.push_back(std::move(f));
    }
    cv.notify_one();
  }
  void close() {
    {
      std::lock_guard lock(m);
      closed = true;
    }
    cv.notify_all();
  }
  Frame pop(Deadline deadline) {
    std::unique_lock lock(m);
    if (!cv.wait_until(lock, deadline, [&] { return !q.empty() || closed; }))
      fail(Errc::Timeout, "recv timed out");
    if (q.empty()) fail(Errc::TransportFailure, "peer closed connection");
    Frame f = std::move(q.front());
    q.pop_front();
    return f;
  }
};

class TcpSendChannel final : public Channel {
 public:
  TcpSendChannel(int fd, BandwidthCap cap) : fd_(fd), bucket_(cap) {}

  void send(u8 type, std::span<const u8> payload) override {
    auto frame = encode_frame(type, payload);
    bucket_.acquire(frame.size());
    {
      std::lock_guard lock(m_);
      write_all(fd_, frame.data(), frame.size());
      stats_.bytes += frame.size();
      stats_.frames.push_back(u32(frame.size()));
    }
  }

  Frame recv(Deadline) override { fail(Errc::TransportFailure, "send-only channel"); }
  void close() override {}
  const ChannelStats& stats() const override { return stats_; }

 private:
  int fd_;
  std::mutex m_;
  TokenBucket bucket_;
  ChannelStats stats_;
};

class TcpRecvChannel final : public Channel {
 public:
  explicit TcpRecvChannel(Inbox* inbox) : inbox_(inbox) {}
  void send(u8, std::span<const u8>) override {
    fail(Errc::TransportFailure, "receive-only channel");
  }
  Frame recv(Deadline deadline) override { return inbox_->pop(deadline); }
  void close() override { inbox_->close(); }
  const ChannelStats& stats() const override { return stats_; }

 private:
  Inbox* inbox_;
  ChannelStats stats_;
};

class TcpNet final : public Net {
 public:
  TcpNet(u16 id, u16 endpoints) : id_(id), endpoints_(endpoints) {
    send_.resize(endpoints);
    recv_.resize(endpoints);
  }
  u16 id() const override { return id_; }
  u16 endpoints() const override { return endpoints_; }
  Channel& to(u16 peer) override { return *send_.at(peer); }
  Channel& from(u16 peer) override { return *recv_.at(peer); }

  std::vector<std::unique_ptr<TcpSendChannel>> send_;
  std::vector<std::unique_ptr<TcpRecvChannel>> recv_;

 private:
  u16 id_;
  u16 endpoints_;
};

int connect_with_retry(const TcpEndpoint& ep, double timeout_s) {
  auto deadline = deadline_in(timeout_s);
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail(Errc::TransportFailure, "socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1)
      fail(Errc::TransportFailure, "bad host: " + ep.host);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return fd;
    }
    ::close(fd);
    if (Clock::now() > deadline) fail(Errc::Timeout, "connect timed out: " + ep.host);
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace

struct TcpMesh::Impl {
  u16 my_id = 0;
  u16 endpoints = 0;
  std::vector<int> peer_fd;
  std::vector<Inbox> inboxes;
  std::vector<std::thread> readers;
  std::unique_ptr<TcpNet> net;
  int listen_fd = -1;

  void start_reader(u16 peer) {
    readers.emplace_back([this, peer] {
      int fd = peer_fd[peer];
      for (;;) {
        u8 header[5];
        if (!read_all(fd, header, 5)) break;
        u32 len = (u32(header[0]) << 24) | (u32(header[1]) << 16) | (u32(header[2]) << 8) |
                  u32(header[3]);
        Frame f;
        f.type = header[4];
        f.payload.resize(len);
        if (len > 0 && !read_all(fd, f.payload.data(), len)) break;
        inboxes[peer].push(std::move(f));
      }
      inboxes[peer].close();
    });
  }
};

TcpMesh::TcpMesh(u16 my_id, const std::vector<TcpEndpoint>& endpoints, BandwidthCap cap,
                 double connect_timeout_s)
    : impl_(new Impl) {
  cap.validate();
  const u16 n = u16(endpoints.size());
  impl_->my_id = my_id;
  impl_->endpoints = n;
  impl_->peer_fd.assign(n, -1);
  impl_->inboxes = std::vector<Inbox>(n);
  impl_->net = std::make_unique<TcpNet>(my_id, n);

  // Lower ids listen for higher ids; a 2-byte hello identifies the dialer.
  if (my_id + 1 < n) {
    int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (lfd < 0) fail(Errc::TransportFailure, "socket() failed");
    int one = 1;
    ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = INADDR_ANY;
    addr.sin_port = htons(endpoints[my_id].port);
    if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
      fail(Errc::TransportFailure, "bind failed on port " + std::to_string(endpoints[my_id].port));
    if (::listen(lfd, n) != 0) fail(Errc::TransportFailure, "listen failed");
    impl_->listen_fd = lfd;
    for (u16 expected = 0; expected < u16(n - my_id - 1); ++expected) {
      int fd = ::accept(lfd, nullptr, nullptr);
      if (fd < 0) fail(Errc::TransportFailure, "accept failed");
      int opt = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &opt, sizeof(opt));
      u8 hello[2];
      if (!read_all(fd, hello, 2)) fail(Errc::TransportFailure, "hello read failed");
      u16 peer = u16(hello[0]) | (u16(hello[1]) << 8);
      if (peer >= n) fail(Errc::TransportFailure, "bad peer id in hello");
      impl_->peer_fd[peer] = fd;
    }
  }
  for (u16 peer = 0; peer < my_id; ++peer) {
    int fd = connect_with_retry(endpoints[peer], connect_timeout_s);
    u8 hello[2] = {u8(my_id & 0xff), u8(my_id >> 8)};
    write_all(fd, hello, 2);
    impl_->peer_fd[peer] = fd;
  }

  for (u16 peer = 0; peer < n; ++peer) {
    if (peer == my_id) continue;
    impl_->net->send_[peer] = std::make_unique<TcpSendChannel>(impl_->peer_fd[peer], cap);
    impl_->net->recv_[peer] = std::make_unique<TcpRecvChannel>(&impl_->inboxes[peer]);
    impl_->start_reader(peer);
  }
}

TcpMesh::~TcpMesh() {
  for (u16 peer = 0; peer < impl_->endpoints; ++peer) {
    if (impl_->peer_fd[peer] >= 0) ::shutdown(impl_->peer_fd[peer], SHUT_RDWR);
  }
  for (auto& t : impl_->readers)
    if (t.joinable()) t.join();
  for (u16 peer = 0; peer < impl_->endpoints; ++peer) {
    if (impl_->peer_fd[peer] >= 0) ::close(impl_->peer_fd[peer]);
  }
  if (impl_->listen_fd >= 0) ::close(impl_->listen_fd);
}

Net& TcpMesh::net() { return *impl_->net; }

MeshStats TcpMesh::harvest() const {
  MeshStats ms;
  ms.endpoints = impl_->endpoints;
  ms.pair.resize(std::size_t(impl_->endpoints) * impl_->endpoints);
  for (u16 peer = 0; peer < impl_->endpoints; ++peer) {
    if (peer == impl_->my_id) continue;
    ms.pair[impl_->my_id * impl_->endpoints + peer] = impl_->net->send_[peer]->stats();
  }
  return ms;
}

}  // namespace mpcforge
