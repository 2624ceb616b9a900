#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "semcast/latent.hpp"

namespace semcast {

/// CRC-32 (IEEE 802.3 polynomial, reflected). crc32("123456789") = 0xCBF43926.
std::uint32_t crc32_ieee(std::span<const std::uint8_t> data);

enum class FrameType : std::uint8_t { Hello = 0, Features = 1, Raw = 2, Bye = 3 };

/// Wire frame, all fields little-endian:
///   magic "SBC1" | version u8 | frame_type u8 | user_id u8 | reserved u8 |
///   interest_bitmap u64 | payload_len u32 | payload (binary32 values) |
///   crc32 u32 over all preceding bytes.
struct FeatureFrame {
  std::uint8_t version = 1;
  FrameType frame_type = FrameType::Features;
  std::uint8_t user_id = 0;
  std::uint64_t interest_bitmap = 0;
  std::vector<float> payload;

  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 1 + 1 + 8 + 4;
  static constexpr std::size_t kTrailerSize = 4;
};

std::vector<std::uint8_t> encode_frame(const FeatureFrame& frame);

enum class FrameStatus { Ok, NeedMoreData, BadMagic, BadVersion, BadCrc };

/// Decode one frame from the front of `data`. On Ok, `consumed` is the full
/// frame length; on BadMagic it is the number of bytes to skip before the
/// next possible magic; on BadCrc/BadVersion it is the corrupt frame's length
/// (resync continues after it); on NeedMoreData it is 0.
FrameStatus decode_frame(std::span<const std::uint8_t> data, FeatureFrame& out,
                         std::size_t& consumed);

/// Strict round-trip decode: throws a distinct error for bad magic, version
/// or CRC, and on trailing bytes.
FeatureFrame frame_roundtrip(std::span<const std::uint8_t> bytes);

/// Incremental self-synchronizing reader: feed bytes, pull complete frames.
/// After a corrupted frame it scans forward for the next magic.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> data);
  /// Next complete frame, or false if more bytes are needed.
  bool next(FeatureFrame& out);
  int crc_failures() const { return crc_failures_; }
  int resyncs() const { return resyncs_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t pos_ = 0;
  int crc_failures_ = 0;
  int resyncs_ = 0;
};

/// Payload for a features frame: the schema blocks named by the bitmap, in
/// block order, as binary32.
std::vector<float> pack_blocks(const LatentCode& code, std::uint64_t bitmap,
                               const LatentSchema& schema);

/// Inverse of pack_blocks; returns the packed vector ordered like the
/// ascending interest set (ready for complete_code).
LatentCode unpack_blocks(const std::vector<float>& payload, std::uint64_t bitmap,
                         const LatentSchema& schema);

/// Bitmap consistency: payload length matches the schema widths of set bits.
bool validate_payload(const FeatureFrame& frame, const LatentSchema& schema);

}  // namespace semcast
