#include "semcast/wire.hpp"

#include <cstring>
#include <stdexcept>

namespace semcast {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'B', 'C', '1'};
constexpr std::size_t kMaxPayload = 1u << 24;  // sanity bound for length fields

struct Crc32Table {
  std::uint32_t t[256];
  Crc32Table() {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
  }
};

const Crc32Table kCrcTable;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t read_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::uint32_t crc32_ieee(std::span<const std::uint8_t> data) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : data) c = kCrcTable.t[(c ^ b) & 0xff] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> encode_frame(const FeatureFrame& frame) {
  std::vector<std::uint8_t> out;
  out.reserve(FeatureFrame::kHeaderSize + 4 * frame.payload.size() + FeatureFrame::kTrailerSize);
  for (std::uint8_t m : kMagic) out.push_back(m);
  out.push_back(frame.version);
  out.push_back(static_cast<std::uint8_t>(frame.frame_type));
  out.push_back(frame.user_id);
  out.push_back(0);  // reserved
  put_u64(out, frame.interest_bitmap);
  put_u32(out, static_cast<std::uint32_t>(4 * frame.payload.size()));
  for (float f : frame.payload) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  const std::uint32_t crc = crc32_ieee({out.data(), out.size()});
  put_u32(out, crc);
  return out;
}

FrameStatus decode_frame(std::span<const std::uint8_t> data, FeatureFrame& out,
                         std::size_t& consumed) {
  consumed = 0;
  if (data.size() < 4) {
    // not enough to check the magic; unless a prefix mismatch is already
    // visible, wait for more bytes
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i] != kMagic[i]) {
        consumed = i + 1;
        return FrameStatus::BadMagic;
      }
    }
    return FrameStatus::NeedMoreData;
  }
  if (std::memcmp(data.data(), kMagic, 4) != 0) {
    // skip to the next candidate magic byte
    std::size_t skip = 1;
    while (skip < data.size() && data[skip] != kMagic[0]) ++skip;
    consumed = skip;
    return FrameStatus::BadMagic;
  }
  if (data.size() < FeatureFrame::kHeaderSize) return FrameStatus::NeedMoreData;
  const std::uint32_t payload_len = read_u32(data.data() + 16);
  if (payload_len > kMaxPayload || payload_len % 4 != 0) {
    consumed = 1;
    return FrameStatus::BadMagic;  // implausible header, treat as noise
  }
  const std::size_t total = FeatureFrame::kHeaderSize + payload_len + FeatureFrame::kTrailerSize;
  if (data.size() < total) return FrameStatus::NeedMoreData;

  const std::uint32_t want = read_u32(data.data() + total - 4);
  const std::uint32_t got = crc32_ieee(data.subspan(0, total - 4));
  if (want != got) {
    consumed = total;
    return FrameStatus::BadCrc;
  }
  const std::uint8_t version = data[4];
  if (version != FeatureFrame::kVersion) {
    consumed = total;
    return FrameStatus::BadVersion;
  }
  out.version = version;
  out.frame_type = static_cast<FrameType>(data[5]);
  out.user_id = data[6];
  out.interest_bitmap = read_u64(data.data() + 8);
  out.payload.resize(payload_len / 4);
  for (std::size_t i = 0; i < out.payload.size(); ++i) {
    const std::uint32_t bits = read_u32(data.data() + FeatureFrame::kHeaderSize + 4 * i);
    std::memcpy(&out.payload[i], &bits, 4);
  }
  consumed = total;
  return FrameStatus::Ok;
}

FeatureFrame frame_roundtrip(std::span<const std::uint8_t> bytes) {
  FeatureFrame frame;
  std::size_t consumed = 0;
  switch (decode_frame(bytes, frame, consumed)) {
    case FrameStatus::Ok:
      if (consumed != bytes.size())
        throw std::invalid_argument("frame_roundtrip: trailing bytes after frame");
      return frame;
    case FrameStatus::NeedMoreData:
      throw std::invalid_argument("frame_roundtrip: truncated frame");
    case FrameStatus::BadMagic:
      throw std::invalid_argument("frame_roundtrip: bad magic");
    case FrameStatus::BadVersion:
      throw std::invalid_argument("frame_roundtrip: unsupported version");
    case FrameStatus::BadCrc:
      throw std::invalid_argument("frame_roundtrip: CRC mismatch");
  }
  throw std::logic_error("frame_roundtrip: unreachable");
}

void FrameReader::feed(std::span<const std::uint8_t> data) {
  buffer_.insert(buffer_.end(), data.begin(), data.end());
}

bool FrameReader::next(FeatureFrame& out) {
  for (;;) {
    std::span<const std::uint8_t> view(buffer_.data() + pos_, buffer_.size() - pos_);
    std::size_t consumed = 0;
    const FrameStatus st = decode_frame(view, out, consumed);
    if (st == FrameStatus::NeedMoreData) {
      // compact the buffer occasionally
      if (pos_ > 0 && pos_ == buffer_.size()) {
        buffer_.clear();
        pos_ = 0;
      } else if (pos_ > (1u << 16)) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
      }
      return false;
    }
    pos_ += consumed;
    if (st == FrameStatus::Ok) return true;
    if (st == FrameStatus::BadCrc) {
      ++crc_failures_;
      ++resyncs_;
    } else {
      ++resyncs_;
    }
  }
}

std::vector<float> pack_blocks(const LatentCode& code, std::uint64_t bitmap,
                               const LatentSchema& schema) {
  if (code.size() != schema.total_width())
    throw std::invalid_argument("pack_blocks: code width does not match schema");
  std::vector<float> payload;
  payload.reserve(static_cast<size_t>(schema.selected_width(bitmap)));
  for (int b = 0; b < schema.n_blocks(); ++b) {
    if (!(bitmap & (1ull << b))) continue;
    const int off = schema.block_offset(b);
    for (int i = 0; i < schema.block_width(b); ++i)
      payload.push_back(static_cast<float>(code[off + i]));
  }
  return payload;
}

LatentCode unpack_blocks(const std::vector<float>& payload, std::uint64_t bitmap,
                         const LatentSchema& schema) {
  const int want = schema.selected_width(bitmap);
  if (static_cast<int>(payload.size()) != want)
    throw std::invalid_argument("unpack_blocks: payload length does not match bitmap");
  LatentCode out(want);
  for (int i = 0; i < want; ++i) out[i] = payload[static_cast<size_t>(i)];
  return out;
}

bool validate_payload(const FeatureFrame& frame, const LatentSchema& schema) {
  for (int b = schema.n_blocks(); b < 64; ++b) {
    if (frame.interest_bitmap & (1ull << b)) return false;
  }
  return static_cast<int>(frame.payload.size()) == schema.selected_width(frame.interest_bitmap);
}

}  // namespace semcast
