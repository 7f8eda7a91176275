#include <thread>

#include "doctest.h"
#include "mpcforge/transport.hpp"

using namespace mpcforge;

namespace {
std::vector<u8> bytes_of(const std::string& s) {
  return std::vector<u8>(s.begin(), s.end());
}
}  // namespace

TEST_CASE("echo round trip and frame accounting") {
  MemHub hub(2, BandwidthCap::unlimited());
  auto payload = bytes_of("hello");
  hub.net(0).send(1, 7, payload);
  auto got = hub.net(1).recv(0, 7, deadline_in(1.0));
  CHECK(got == payload);

  auto stats = hub.harvest();
  CHECK(stats.at(0, 1).bytes == kFrameOverhead + payload.size());
  CHECK(stats.at(0, 1).frames == std::vector<u32>{u32(kFrameOverhead + payload.size())});
  CHECK(stats.at(1, 0).bytes == 0);
  CHECK(stats.global_bytes() == kFrameOverhead + payload.size());
}

TEST_CASE("frames preserve order and type tags are checked") {
  MemHub hub(2, BandwidthCap::unlimited());
  hub.net(0).send(1, 1, bytes_of("a"));
  hub.net(0).send(1, 1, bytes_of("b"));
  CHECK(hub.net(1).recv(0, 1, deadline_in(1.0)) == bytes_of("a"));
  CHECK(hub.net(1).recv(0, 1, deadline_in(1.0)) == bytes_of("b"));

  hub.net(0).send(1, 2, bytes_of("c"));
  CHECK_THROWS_AS(hub.net(1).recv(0, 9, deadline_in(1.0)), Error);
}

TEST_CASE("recv on a closed channel fails, timeout fires") {
  MemHub hub(2, BandwidthCap::unlimited());
  SUBCASE("closed") {
    hub.close_outbound(0);
    try {
      hub.net(1).recv(0, 1, deadline_in(1.0));
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::TransportFailure);
    }
  }
  SUBCASE("timeout") {
    try {
      hub.net(1).recv(0, 1, deadline_in(0.05));
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::Timeout);
    }
  }
}

TEST_CASE("token bucket paces sustained sends") {
  // 4 MB at 100 Mbit/s nominal 0.32 s minus the 128 KiB burst.
  BandwidthCap cap;
  cap.rate_bps = 100'000'000;
  MemHub hub(2, cap);
  std::vector<u8> chunk(64 * 1024, 0xab);
  std::thread drain([&] {
    for (int i = 0; i < 64; ++i) hub.net(1).recv(0, 1, deadline_in(30.0));
  });
  auto t0 = Clock::now();
  for (int i = 0; i < 64; ++i) hub.net(0).send(1, 1, chunk);
  double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  drain.join();
  double nominal = double(64 * chunk.size() - cap.burst_bytes) * 8 / double(cap.rate_bps);
  CHECK(elapsed >= nominal * 0.9);
  CHECK(elapsed < nominal * 3);
}

TEST_CASE("bandwidth cap parsing and validation") {
  CHECK(BandwidthCap::parse("1g").rate_bps == 1'000'000'000);
  CHECK(BandwidthCap::parse("20g").rate_bps == 20'000'000'000ull);
  CHECK(BandwidthCap::parse("unlimited").rate_bps == 0);
  CHECK(BandwidthCap::parse("12345").rate_bps == 12345);
  CHECK_THROWS_AS(BandwidthCap::parse("fast"), Error);

  BandwidthCap tiny;
  tiny.rate_bps = 1000;
  tiny.burst_bytes = 3;  // below one frame
  CHECK_THROWS_AS(tiny.validate(), Error);
}

TEST_CASE("tcp mesh matches in-memory byte accounting") {
  std::vector<TcpEndpoint> eps{{"127.0.0.1", 18471}, {"127.0.0.1", 18472}, {"127.0.0.1", 18473}};
  auto script = [](Net& net) {
    // Everyone sends one 11-byte frame to everyone else, then echoes lengths.
    std::vector<u8> payload(11, u8(net.id()));
    for (u16 j = 0; j < net.endpoints(); ++j)
      if (j != net.id()) net.send(j, 3, payload);
    for (u16 j = 0; j < net.endpoints(); ++j)
      if (j != net.id()) CHECK(net.recv(j, 3, deadline_in(5.0)).size() == 11);
  };

  MemHub hub(3, BandwidthCap::unlimited());
  std::vector<std::thread> mem_threads;
  for (u16 i = 0; i < 3; ++i) mem_threads.emplace_back([&, i] { script(hub.net(i)); });
  for (auto& t : mem_threads) t.join();
  auto mem_stats = hub.harvest();

  std::vector<MeshStats> tcp_stats(3);
  std::vector<std::thread> tcp_threads;
  for (u16 i = 0; i < 3; ++i) {
    tcp_threads.emplace_back([&, i] {
      TcpMesh mesh(i, eps, BandwidthCap::unlimited());
      script(mesh.net());
      tcp_stats[i] = mesh.harvest();
    });
  }
  for (auto& t : tcp_threads) t.join();

  for (u16 i = 0; i < 3; ++i)
    for (u16 j = 0; j < 3; ++j)
      if (i != j) CHECK(mem_stats.at(i, j).bytes == tcp_stats[i].at(i, j).bytes);
}
