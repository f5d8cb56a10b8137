#include "fedsentry/protocol.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace fedsentry {
namespace {

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void append_double(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int shift = 0; shift < 64; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((bits >> shift) & 0xff));
  }
}

void append_vector(std::vector<std::uint8_t>& out, const ParamVector& v) {
  append_u32(out, static_cast<std::uint32_t>(v.dim()));
  for (std::size_t i = 0; i < v.dim(); ++i) {
    append_double(out, v[i]);
  }
}

struct Reader {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;

  std::size_t remaining() const { return data.size() - pos; }

  bool read_u32(std::uint32_t& out) {
    if (remaining() < 4) return false;
    out = static_cast<std::uint32_t>(data[pos]) |
          (static_cast<std::uint32_t>(data[pos + 1]) << 8) |
          (static_cast<std::uint32_t>(data[pos + 2]) << 16) |
          (static_cast<std::uint32_t>(data[pos + 3]) << 24);
    pos += 4;
    return true;
  }

  bool read_double(double& out) {
    if (remaining() < 8) return false;
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
    }
    pos += 8;
    out = std::bit_cast<double>(bits);
    return true;
  }
};

DecodeError malformed(std::string detail) {
  return DecodeError{DecodeError::Kind::malformed_payload, std::move(detail)};
}

// Reads a length-prefixed vector, rejecting lengths that cannot fit in
// the remaining payload before allocating anything.
std::variant<ParamVector, DecodeError> read_param_vector(Reader& r) {
  std::uint32_t len = 0;
  if (!r.read_u32(len)) {
    return malformed("vector length missing");
  }
  if (static_cast<std::size_t>(len) * 8 > r.remaining()) {
    return malformed("vector length exceeds payload");
  }
  std::vector<double> values(len);
  for (std::uint32_t i = 0; i < len; ++i) {
    double v = 0.0;
    if (!r.read_double(v)) {
      return malformed("vector truncated");
    }
    if (!std::isfinite(v)) {
      return DecodeError{DecodeError::Kind::non_finite_value, "non-finite vector entry"};
    }
    values[i] = v;
  }
  return ParamVector::from_values(std::move(values));
}

}  // namespace

std::string to_string(DecodeError::Kind kind) {
  switch (kind) {
    case DecodeError::Kind::bad_magic:
      return "bad_magic";
    case DecodeError::Kind::bad_version:
      return "bad_version";
    case DecodeError::Kind::bad_type:
      return "bad_type";
    case DecodeError::Kind::truncated:
      return "truncated";
    case DecodeError::Kind::length_mismatch:
      return "length_mismatch";
    case DecodeError::Kind::malformed_payload:
      return "malformed_payload";
    case DecodeError::Kind::non_finite_value:
      return "non_finite_value";
  }
  throw std::logic_error("to_string: bad DecodeError::Kind");
}

std::vector<std::uint8_t> encode_message(const RoundMessage& message) {
  std::vector<std::uint8_t> payload;
  std::uint8_t type = 0;
  if (const auto* b = std::get_if<GlobalBroadcast>(&message)) {
    type = static_cast<std::uint8_t>(MessageType::global_broadcast);
    append_u32(payload, b->round);
    append_vector(payload, b->theta);
  } else if (const auto* u = std::get_if<ClientUpdate>(&message)) {
    if (!std::isfinite(u->train_seconds)) {
      throw std::invalid_argument("encode_message: non-finite train_seconds");
    }
    type = static_cast<std::uint8_t>(MessageType::client_update);
    append_u32(payload, u->client_id);
    append_u32(payload, u->round);
    append_vector(payload, u->update);
    append_u32(payload, u->n_samples);
    append_double(payload, u->train_seconds);
  } else {
    type = static_cast<std::uint8_t>(MessageType::shutdown);
  }

  std::vector<std::uint8_t> frame;
  frame.reserve(kFrameHeaderSize + payload.size());
  for (std::uint8_t b : kProtocolMagic) frame.push_back(b);
  frame.push_back(kProtocolVersion);
  frame.push_back(type);
  append_u32(frame, static_cast<std::uint32_t>(payload.size()));
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

std::variant<FrameHeader, DecodeError> decode_header(
    std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderSize) {
    return DecodeError{DecodeError::Kind::truncated, "header shorter than 10 bytes"};
  }
  if (std::memcmp(header.data(), kProtocolMagic, 4) != 0) {
    return DecodeError{DecodeError::Kind::bad_magic, "magic mismatch"};
  }
  if (header[4] != kProtocolVersion) {
    return DecodeError{DecodeError::Kind::bad_version, "unsupported version"};
  }
  const std::uint8_t type = header[5];
  if (type != static_cast<std::uint8_t>(MessageType::global_broadcast) &&
      type != static_cast<std::uint8_t>(MessageType::client_update) &&
      type != static_cast<std::uint8_t>(MessageType::shutdown)) {
    return DecodeError{DecodeError::Kind::bad_type, "unknown message type"};
  }
  std::uint32_t payload_size = static_cast<std::uint32_t>(header[6]) |
                               (static_cast<std::uint32_t>(header[7]) << 8) |
                               (static_cast<std::uint32_t>(header[8]) << 16) |
                               (static_cast<std::uint32_t>(header[9]) << 24);
  return FrameHeader{static_cast<MessageType>(type), payload_size};
}

DecodeResult decode_message(std::span<const std::uint8_t> frame) {
  auto header = decode_header(frame);
  if (const auto* err = std::get_if<DecodeError>(&header)) {
    return *err;
  }
  const FrameHeader info = std::get<FrameHeader>(header);
  const std::size_t expected = kFrameHeaderSize + info.payload_size;
  if (frame.size() < expected) {
    return DecodeError{DecodeError::Kind::truncated, "frame shorter than declared"};
  }
  if (frame.size() > expected) {
    return DecodeError{DecodeError::Kind::length_mismatch, "frame longer than declared"};
  }

  Reader r{frame.subspan(kFrameHeaderSize), 0};
  RoundMessage out;
  switch (info.type) {
    case MessageType::global_broadcast: {
      GlobalBroadcast b;
      if (!r.read_u32(b.round)) {
        return malformed("broadcast round missing");
      }
      auto theta = read_param_vector(r);
      if (const auto* err = std::get_if<DecodeError>(&theta)) {
        return *err;
      }
      b.theta = std::move(std::get<ParamVector>(theta));
      out = std::move(b);
      break;
    }
    case MessageType::client_update: {
      ClientUpdate u;
      if (!r.read_u32(u.client_id) || !r.read_u32(u.round)) {
        return malformed("update header fields missing");
      }
      auto update = read_param_vector(r);
      if (const auto* err = std::get_if<DecodeError>(&update)) {
        return *err;
      }
      u.update = std::move(std::get<ParamVector>(update));
      if (!r.read_u32(u.n_samples)) {
        return malformed("n_samples missing");
      }
      if (!r.read_double(u.train_seconds)) {
        return malformed("train_seconds missing");
      }
      if (!std::isfinite(u.train_seconds)) {
        return DecodeError{DecodeError::Kind::non_finite_value,
                           "non-finite train_seconds"};
      }
      out = std::move(u);
      break;
    }
    case MessageType::shutdown:
      out = Shutdown{};
      break;
  }
  if (r.remaining() != 0) {
    return malformed("payload has trailing bytes");
  }
  return out;
}

}  // namespace fedsentry
