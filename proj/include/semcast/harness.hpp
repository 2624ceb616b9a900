#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semcast/autoencoder.hpp"
#include "semcast/wire.hpp"

namespace semcast {

/// Per-user transmission metrics for one serve session.
struct TransmitterMetrics {
  struct PerUser {
    int user_id = 0;
    std::uint64_t interest_bitmap = 0;
    int frames = 0;
    std::uint64_t payload_bytes = 0;  // semantic payload only
    std::uint64_t wire_bytes = 0;     // headers + payload + crc
    double compression_ratio = 1.0;   // raw input bytes / payload bytes
  };
  std::vector<PerUser> users;
  double wall_ms = 0.0;          // first byte queued to last application ack
  double per_frame_ms = 0.0;
  int frames = 0;
  bool raw_mode = false;
};

struct ReceiverMetrics {
  int user_id = 0;
  int frames = 0;
  int crc_failures = 0;
  int resyncs = 0;
  int decoded = 0;
  std::uint64_t payload_bytes = 0;
  double mean_psnr = 0.0;  // only when ground truth is supplied
  bool got_bye = false;
};

/// One transmitter fanning identical semantic content out to K users over
/// per-user TCP connections. Binding happens at construction so the port is
/// known before clients connect (pass port 0 for an ephemeral port).
class Transmitter {
 public:
  explicit Transmitter(std::uint16_t port, const std::string& bind_addr = "127.0.0.1");
  ~Transmitter();
  Transmitter(const Transmitter&) = delete;
  Transmitter& operator=(const Transmitter&) = delete;

  std::uint16_t port() const { return port_; }

  /// Accept `expected_users` connections, register their hello interests,
  /// then per input column: encode, select each user's blocks, frame and
  /// send. raw_mode sends the full input vector instead. Ends with a bye and
  /// waits for each user's application-level ack.
  TransmitterMetrics serve(const AeModel& model, const Eigen::MatrixXd& inputs, int n_frames,
                           int expected_users, bool raw_mode = false);

 private:
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
};

struct ReceiveOptions {
  int user_id = 0;
  std::uint64_t interest_bitmap = 0;
  /// Knowledge-base donor code (full schema width) for feature completion.
  std::optional<Eigen::VectorXd> donor;
  /// Ground-truth inputs in frame order for PSNR (out-of-band).
  std::optional<Eigen::MatrixXd> truth;
};

/// Connect, send hello, consume frames until bye, complete + decode features
/// frames when a model is given, then ack the bye.
ReceiverMetrics receive(const std::string& host, std::uint16_t port, const AeModel* model,
                        const ReceiveOptions& options);

}  // namespace semcast
