#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <future>
#include <thread>

#include "semcast/dataset.hpp"
#include "semcast/harness.hpp"

using namespace semcast;

namespace {

AeModel desk_model() {
  LatentSchema schema({{"attr0", 4}, {"attr1", 4}, {"attr2", 4}}, {{0}, {1}});
  Rng rng(7);
  return AeModel::init(schema, 48, 24, rng);
}

}  // namespace

TEST_CASE("loopback session: frames, CRC, completion and compression ratio") {
  const AeModel model = desk_model();
  const AttributeDataset ds({4, 4, 4}, 48, 7);
  Transmitter tx(0);
  const std::uint16_t port = tx.port();

  const Eigen::VectorXd donor = model.encode(ds.sample(0));
  auto client = [&](int user, std::uint64_t bitmap) {
    ReceiveOptions opt;
    opt.user_id = user;
    opt.interest_bitmap = bitmap;
    opt.donor = donor;
    opt.truth = ds.samples();
    return receive("127.0.0.1", port, &model, opt);
  };
  auto f0 = std::async(std::launch::async, client, 0, 0b001ull);
  auto f1 = std::async(std::launch::async, client, 1, 0b010ull);
  const auto metrics = tx.serve(model, ds.samples(), 200, 2);
  const auto r0 = f0.get();
  const auto r1 = f1.get();

  CHECK(metrics.frames == 200);
  REQUIRE(metrics.users.size() == 2);
  for (const auto& u : metrics.users) {
    CHECK(u.frames == 200);
    // one width-4 block out of a 48-float input: ratio 48/4 = 12 exactly
    CHECK(u.compression_ratio == 12.0);
    CHECK(u.payload_bytes == 200ull * 4ull * 4ull);
  }
  for (const auto& r : {r0, r1}) {
    CHECK(r.frames == 200);
    CHECK(r.crc_failures == 0);
    CHECK(r.resyncs == 0);
    CHECK(r.decoded == 200);
    CHECK(r.got_bye);
    CHECK(r.mean_psnr > 0.0);
  }
  CHECK(metrics.wall_ms > 0.0);
}

TEST_CASE("raw mode carries the whole input and reports ratio 1") {
  const AeModel model = desk_model();
  const AttributeDataset ds({4, 4, 4}, 48, 7);
  Transmitter tx(0);
  const std::uint16_t port = tx.port();
  auto client = std::async(std::launch::async, [&] {
    ReceiveOptions opt;
    opt.user_id = 0;
    opt.interest_bitmap = 0b001;
    return receive("127.0.0.1", port, &model, opt);
  });
  const auto metrics = tx.serve(model, ds.samples(), 50, 1, /*raw_mode=*/true);
  const auto r = client.get();
  CHECK(metrics.users[0].compression_ratio == 1.0);
  CHECK(metrics.users[0].payload_bytes == 50ull * 48ull * 4ull);
  CHECK(r.frames == 50);
  CHECK(r.decoded == 0);  // raw frames are not decoded
}

TEST_CASE("the receiver counts corrupted frames and resynchronizes mid-stream") {
  // hand-rolled sender: hello handshake, then frame, garbage, frame, bye
  const AeModel model = desk_model();
  const int listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(listen_fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::bind(listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  REQUIRE(::listen(listen_fd, 1) == 0);
  socklen_t alen = sizeof(addr);
  ::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &alen);
  const std::uint16_t port = ntohs(addr.sin_port);

  auto sender = std::async(std::launch::async, [&] {
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    REQUIRE(fd >= 0);
    std::uint8_t drop[256];
    (void)::recv(fd, drop, sizeof(drop), 0);  // consume the hello

    LatentCode z = model.encode(Eigen::VectorXd::Constant(48, 0.25));
    FeatureFrame good;
    good.frame_type = FrameType::Features;
    good.interest_bitmap = 0b001;
    good.payload = pack_blocks(z, 0b001, model.schema());

    std::vector<std::uint8_t> stream;
    auto append = [&stream](const std::vector<std::uint8_t>& b) {
      stream.insert(stream.end(), b.begin(), b.end());
    };
    append(encode_frame(good));
    auto corrupted = encode_frame(good);
    corrupted[FeatureFrame::kHeaderSize + 1] ^= 0xaa;  // payload bit flips
    append(corrupted);
    const std::vector<std::uint8_t> garbage = {'S', 'B', 0x01, 0x02, 0xff, 0xfe};
    append(garbage);
    append(encode_frame(good));
    FeatureFrame bye;
    bye.frame_type = FrameType::Bye;
    append(encode_frame(bye));
    size_t off = 0;
    while (off < stream.size()) {
      const ssize_t n = ::send(fd, stream.data() + off, stream.size() - off, 0);
      REQUIRE(n > 0);
      off += static_cast<size_t>(n);
    }
    std::uint8_t ack[256];
    (void)::recv(fd, ack, sizeof(ack), 0);
    ::close(fd);
  });

  ReceiveOptions opt;
  opt.user_id = 0;
  opt.interest_bitmap = 0b001;
  opt.donor = model.encode(Eigen::VectorXd::Zero(48));
  const auto metrics = receive("127.0.0.1", port, &model, opt);
  sender.get();
  ::close(listen_fd);

  CHECK(metrics.frames == 2);  // the corrupted frame was discarded
  CHECK(metrics.crc_failures == 1);
  CHECK(metrics.resyncs >= 1);
  CHECK(metrics.decoded == 2);
  CHECK(metrics.got_bye);
}

TEST_CASE("serve validates inputs") {
  const AeModel model = desk_model();
  Transmitter tx(0);
  Eigen::MatrixXd wrong(13, 4);
  CHECK_THROWS_AS(tx.serve(model, wrong, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(tx.serve(model, Eigen::MatrixXd::Zero(48, 4), 0, 1), std::invalid_argument);
}
