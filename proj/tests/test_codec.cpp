#include <doctest.h>

#include <random>
#include <thread>

#include "hyjob/message.hpp"
#include "hyjob/transport.hpp"
#include "support.hpp"

using namespace hyjob;

namespace {

ErrorCode decode_error(const Bytes& b) {
  try {
    decode(b);
  } catch (const DecodeError& e) {
    return e.code();
  }
  return ErrorCode::Aborted;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("release layout") {
  CHECK(encode(ReleaseMsg{7}) == Bytes{9, 0, 0, 0, 6, 7, 0, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("fetch layout") {
  CHECK(encode(FetchMsg{5, 5, 10}) ==
        Bytes{17, 0, 0, 0, 4, 5, 0, 0, 0, 0, 0, 0, 0, 5, 0, 0, 0, 10, 0, 0, 0});
}

TEST_CASE("shutdown is a bare tag") { CHECK(encode(ShutdownMsg{}) == Bytes{1, 0, 0, 0, 9}); }

TEST_CASE("decode errors") {
  CHECK(decode_error(Bytes{1, 0, 0, 0, 0xFF}) == ErrorCode::UnknownTag);
  CHECK(decode_error(Bytes{5, 0, 0}) == ErrorCode::TruncatedFrame);
  CHECK(decode_error(Bytes{10, 0, 0, 0, 6}) == ErrorCode::TruncatedFrame);
  CHECK(decode_error(Bytes{0, 0, 0, 0}) == ErrorCode::MalformedBody);

  auto frame = encode(ChunksMsg{3, {DataChunk::of<double>({1, 2, 3})}});
  // Shrink the body but keep the length prefix consistent.
  Bytes cut(frame.begin(), frame.end() - 4);
  std::uint32_t len = static_cast<std::uint32_t>(cut.size() - 4);
  std::memcpy(cut.data(), &len, 4);
  try {
    decode(cut);
    FAIL("expected MalformedBody");
  } catch (const DecodeError& e) {
    CHECK(e.code() == ErrorCode::MalformedBody);
    CHECK(e.offset() > 4);
    CHECK(e.offset() <= cut.size());
  }
}

TEST_CASE("hello round trip") {
  Message m = HelloMsg{3, 4, kProtocolVersion, "127.0.0.1:9000"};
  CHECK(decode(encode(m)) == m);
}

TEST_CASE("random messages round trip") {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 2000; ++i) {
    auto m = testsupport::random_message(rng);
    auto bytes = encode(m);
    auto back = decode(bytes);
    CHECK(back == m);
    CHECK(encode(back) == bytes);
  }
}

TEST_CASE("concatenated frames resynchronize") {
  std::mt19937_64 rng(99);
  std::vector<Message> msgs;
  Bytes stream;
  for (int i = 0; i < 200; ++i) {
    msgs.push_back(testsupport::random_message(rng));
    encode_into(msgs.back(), stream);
  }
  std::size_t off = 0;
  for (const auto& m : msgs) {
    auto [back, used] = decode_prefix(std::span<const std::uint8_t>(stream).subspan(off));
    CHECK(back == m);
    off += used;
  }
  CHECK(off == stream.size());
}

TEST_CASE("random bytes never crash the decoder") {
  std::mt19937_64 rng(7);
  int accepted = 0;
  for (int i = 0; i < 20000; ++i) {
    Bytes b(rng() % 64);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    if (b.size() >= 4 && rng() % 2) {
      std::uint32_t len = static_cast<std::uint32_t>(b.size() - 4);
      std::memcpy(b.data(), &len, 4);
      b[4] = static_cast<std::uint8_t>(1 + rng() % 10);
    }
    try {
      auto m = decode(b);
      CHECK(encode(m) == b);  // accepted inputs are exactly encodings
      ++accepted;
    } catch (const DecodeError&) {
    }
  }
  MESSAGE(accepted << " random frames decoded");
}

}

TEST_SUITE("transport") {

TEST_CASE("inproc pair delivers in order and signals closure") {
  auto [a, b] = transport::InprocNetwork::pair();
  for (std::uint64_t i = 0; i < 10; ++i) a->send(ReleaseMsg{i});
  for (std::uint64_t i = 0; i < 10; ++i) CHECK(b->receive() == Message{ReleaseMsg{i}});
  a->close();
  try {
    b->receive();
    FAIL("expected PeerClosed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PeerClosed);
  }
}

TEST_CASE("inproc listener") {
  transport::InprocNetwork net;
  auto listener = net.listen();
  auto client = net.connect(listener->address());
  auto server = listener->accept();
  client->send(HelloMsg{1, 2, 1, "x"});
  CHECK(server->receive() == Message{HelloMsg{1, 2, 1, "x"}});
  try {
    net.connect("inproc:999999");
    FAIL("expected ConnectFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConnectFailed);
  }
}

TEST_CASE("tcp loopback") {
  transport::TcpNetwork net;
  auto listener = net.listen();
  std::unique_ptr<transport::Endpoint> server;
  std::thread acceptor([&] { server = listener->accept(); });
  auto client = net.connect(listener->address());
  acceptor.join();
  std::mt19937_64 rng(5);
  std::vector<Message> sent;
  for (int i = 0; i < 200; ++i) {
    sent.push_back(testsupport::random_message(rng));
    client->send(sent.back());
  }
  for (const auto& m : sent) CHECK(server->receive() == m);
  server->send(ShutdownMsg{});
  CHECK(client->receive() == Message{ShutdownMsg{}});
  client->close();
  try {
    server->receive();
    FAIL("expected PeerClosed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PeerClosed);
  }
}

TEST_CASE("tcp connect to a closed port fails") {
  transport::TcpNetwork net;
  std::string addr;
  {
    auto l = net.listen();
    addr = l->address();
    l->close();
  }
  try {
    net.connect(addr);
    FAIL("expected ConnectFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConnectFailed);
  }
}

}
