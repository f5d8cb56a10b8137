#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedsentry/param_vector.hpp"

namespace fedsentry {

// Frame layout: 4-byte magic "FDTP", version byte, type byte, then a
// little-endian u32 payload length followed by exactly that many payload
// bytes. Doubles travel as 8-byte little-endian IEEE 754; vectors as a
// u32 element count plus the elements.
inline constexpr std::uint8_t kProtocolMagic[4] = {'F', 'D', 'T', 'P'};
inline constexpr std::uint8_t kProtocolVersion = 0x01;
inline constexpr std::size_t kFrameHeaderSize = 10;

enum class MessageType : std::uint8_t {
  global_broadcast = 0x01,
  client_update = 0x02,
  shutdown = 0x03,
};

struct GlobalBroadcast {
  std::uint32_t round = 0;
  ParamVector theta;

  bool operator==(const GlobalBroadcast&) const = default;
};

struct ClientUpdate {
  std::uint32_t client_id = 0;
  std::uint32_t round = 0;
  ParamVector update;  // delta against the broadcast model for `round`
  std::uint32_t n_samples = 0;
  double train_seconds = 0.0;

  bool operator==(const ClientUpdate&) const = default;
};

struct Shutdown {
  bool operator==(const Shutdown&) const = default;
};

using RoundMessage = std::variant<GlobalBroadcast, ClientUpdate, Shutdown>;

struct DecodeError {
  enum class Kind {
    bad_magic,
    bad_version,
    bad_type,
    truncated,
    length_mismatch,
    malformed_payload,
    non_finite_value,
  };

  Kind kind;
  std::string detail;

  bool operator==(const DecodeError& other) const { return kind == other.kind; }
};

std::string to_string(DecodeError::Kind kind);

using DecodeResult = std::variant<RoundMessage, DecodeError>;

std::vector<std::uint8_t> encode_message(const RoundMessage& message);

// Decodes exactly one frame. The buffer must hold the whole frame and
// nothing else; extra or missing bytes are reported as errors rather
// than thrown.
DecodeResult decode_message(std::span<const std::uint8_t> frame);

struct FrameHeader {
  MessageType type;
  std::uint32_t payload_size;
};

// Validates the 10-byte header so transports know how much payload to read.
std::variant<FrameHeader, DecodeError> decode_header(
    std::span<const std::uint8_t> header);

}  // namespace fedsentry
