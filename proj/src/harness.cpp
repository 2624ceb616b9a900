#include "semcast/harness.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <stdexcept>

namespace semcast {

namespace {

constexpr std::size_t kSendBufferFlush = 1u << 16;

void send_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) throw std::runtime_error("harness: send failed: " + std::string(strerror(errno)));
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

struct Connection {
  int fd = -1;
  ~Connection() {
    if (fd >= 0) ::close(fd);
  }
  Connection() = default;
  explicit Connection(int f) : fd(f) {}
  Connection(Connection&& o) noexcept : fd(o.fd) { o.fd = -1; }
  Connection& operator=(Connection&& o) noexcept {
    if (fd >= 0) ::close(fd);
    fd = o.fd;
    o.fd = -1;
    return *this;
  }
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
};

/// Read until one complete frame is available or the peer closes.
bool read_frame(int fd, FrameReader& reader, FeatureFrame& out) {
  std::uint8_t buf[4096];
  while (!reader.next(out)) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n == 0) return false;
    if (n < 0) throw std::runtime_error("harness: recv failed: " + std::string(strerror(errno)));
    reader.feed({buf, static_cast<std::size_t>(n)});
  }
  return true;
}

}  // namespace

Transmitter::Transmitter(std::uint16_t port, const std::string& bind_addr) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("harness: socket failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw std::runtime_error("harness: bad bind address " + bind_addr);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error("harness: bind failed: " + std::string(strerror(errno)));
  }
  if (::listen(listen_fd_, 16) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error("harness: listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Transmitter::~Transmitter() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

TransmitterMetrics Transmitter::serve(const AeModel& model, const Eigen::MatrixXd& inputs,
                                      int n_frames, int expected_users, bool raw_mode) {
  if (inputs.rows() != model.input_dim())
    throw std::invalid_argument("serve: input dimension does not match the model");
  if (n_frames < 1 || expected_users < 1)
    throw std::invalid_argument("serve: need at least one frame and one user");

  struct UserState {
    Connection conn;
    FrameReader reader;
    TransmitterMetrics::PerUser metrics;
    std::vector<std::uint8_t> out_buffer;
  };
  std::vector<UserState> users(static_cast<size_t>(expected_users));

  // registration: accept and read each user's hello
  for (auto& u : users) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) throw std::runtime_error("harness: accept failed");
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    u.conn = Connection(fd);
    FeatureFrame hello;
    if (!read_frame(fd, u.reader, hello) || hello.frame_type != FrameType::Hello)
      throw std::runtime_error("harness: connection closed before hello");
    if (!hello.payload.empty())
      throw std::runtime_error("harness: malformed hello (unexpected payload), dropping user");
    for (int b = model.schema().n_blocks(); b < 64; ++b) {
      if (hello.interest_bitmap & (1ull << b))
        throw std::runtime_error("harness: hello interest bitmap names unknown blocks");
    }
    u.metrics.user_id = hello.user_id;
    u.metrics.interest_bitmap = hello.interest_bitmap;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n_inputs = inputs.cols();
  const std::uint64_t raw_bytes_per_frame = 4ull * static_cast<std::uint64_t>(inputs.rows());

  for (int f = 0; f < n_frames; ++f) {
    const Eigen::VectorXd x = inputs.col(f % n_inputs);
    LatentCode z;
    if (!raw_mode) z = model.encode(x);
    for (auto& u : users) {
      FeatureFrame frame;
      frame.user_id = static_cast<std::uint8_t>(u.metrics.user_id);
      if (raw_mode) {
        frame.frame_type = FrameType::Raw;
        frame.interest_bitmap = 0;
        frame.payload.resize(static_cast<size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i)
          frame.payload[static_cast<size_t>(i)] = static_cast<float>(x[i]);
      } else {
        frame.frame_type = FrameType::Features;
        frame.interest_bitmap = u.metrics.interest_bitmap;
        frame.payload = pack_blocks(z, u.metrics.interest_bitmap, model.schema());
      }
      const auto bytes = encode_frame(frame);
      u.out_buffer.insert(u.out_buffer.end(), bytes.begin(), bytes.end());
      u.metrics.payload_bytes += 4ull * frame.payload.size();
      u.metrics.wire_bytes += bytes.size();
      u.metrics.frames += 1;
      if (u.out_buffer.size() >= kSendBufferFlush) {
        send_all(u.conn.fd, u.out_buffer.data(), u.out_buffer.size());
        u.out_buffer.clear();
      }
    }
  }

  // bye + flush, then wait for each user's application-level ack
  for (auto& u : users) {
    FeatureFrame bye;
    bye.frame_type = FrameType::Bye;
    bye.user_id = static_cast<std::uint8_t>(u.metrics.user_id);
    const auto bytes = encode_frame(bye);
    u.out_buffer.insert(u.out_buffer.end(), bytes.begin(), bytes.end());
    send_all(u.conn.fd, u.out_buffer.data(), u.out_buffer.size());
    u.out_buffer.clear();
  }
  for (auto& u : users) {
    FeatureFrame ack;
    if (!read_frame(u.conn.fd, u.reader, ack) || ack.frame_type != FrameType::Bye)
      throw std::runtime_error("harness: user did not acknowledge the session end");
  }
  const auto t1 = std::chrono::steady_clock::now();

  TransmitterMetrics metrics;
  metrics.raw_mode = raw_mode;
  metrics.frames = n_frames;
  metrics.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  metrics.per_frame_ms = metrics.wall_ms / static_cast<double>(n_frames);
  for (auto& u : users) {
    u.metrics.compression_ratio =
        u.metrics.payload_bytes > 0
            ? static_cast<double>(raw_bytes_per_frame) * u.metrics.frames /
                  static_cast<double>(u.metrics.payload_bytes)
            : 1.0;
    metrics.users.push_back(u.metrics);
  }
  return metrics;
}

ReceiverMetrics receive(const std::string& host, std::uint16_t port, const AeModel* model,
                        const ReceiveOptions& options) {
  if (model && (options.user_id < 0 || options.user_id >= model->n_users()))
    throw std::invalid_argument("receive: user_id has no decoder in the model");
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("harness: socket failed");
  Connection conn(fd);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("harness: bad host " + host);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0)
    throw std::runtime_error("harness: connect failed: " + std::string(strerror(errno)));

  FeatureFrame hello;
  hello.frame_type = FrameType::Hello;
  hello.user_id = static_cast<std::uint8_t>(options.user_id);
  hello.interest_bitmap = options.interest_bitmap;
  const auto hello_bytes = encode_frame(hello);
  send_all(fd, hello_bytes.data(), hello_bytes.size());

  ReceiverMetrics metrics;
  metrics.user_id = options.user_id;
  FrameReader reader;
  FeatureFrame frame;
  double psnr_acc = 0.0;
  int psnr_cnt = 0;
  std::vector<int> interest;
  if (model) {
    for (int b = 0; b < model->schema().n_blocks(); ++b)
      if (options.interest_bitmap & (1ull << b)) interest.push_back(b);
  }

  while (read_frame(fd, reader, frame)) {
    if (frame.frame_type == FrameType::Bye) {
      metrics.got_bye = true;
      break;
    }
    if (frame.frame_type == FrameType::Features || frame.frame_type == FrameType::Raw) {
      metrics.frames += 1;
      metrics.payload_bytes += 4ull * frame.payload.size();
      if (model && frame.frame_type == FrameType::Features) {
        if (!validate_payload(frame, model->schema())) continue;
        const LatentCode received = unpack_blocks(frame.payload, frame.interest_bitmap,
                                                  model->schema());
        LatentCode completed;
        if (options.donor) {
          completed = complete_code(received, interest, *options.donor, model->schema());
        } else if (static_cast<int>(received.size()) == model->schema().total_width()) {
          completed = received;
        } else {
          continue;  // cannot complete without a donor
        }
        const Eigen::VectorXd xhat = model->decode(options.user_id, completed);
        metrics.decoded += 1;
        if (options.truth) {
          const Eigen::Index col = (metrics.frames - 1) % options.truth->cols();
          psnr_acc += psnr(options.truth->col(col), xhat);
          ++psnr_cnt;
        }
      }
    }
  }
  metrics.crc_failures = reader.crc_failures();
  metrics.resyncs = reader.resyncs();
  if (psnr_cnt > 0) metrics.mean_psnr = psnr_acc / psnr_cnt;

  FeatureFrame ack;
  ack.frame_type = FrameType::Bye;
  ack.user_id = static_cast<std::uint8_t>(options.user_id);
  const auto ack_bytes = encode_frame(ack);
  send_all(fd, ack_bytes.data(), ack_bytes.size());
  return metrics;
}

}  // namespace semcast
