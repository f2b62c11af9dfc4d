#pragma once

// Wire format of the house network:
//
//   address(1) function(1) payload_len(2, big-endian) payload(len) crc(2, little-endian)
//
// The CRC is CRC-16 with the reflected polynomial 0xA001 and initial value
// 0xFFFF over every byte before it. Frames are length-delimited, so there is
// no inter-frame silence to detect as on a serial line.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flockplan/errors.hpp"

namespace flockplan::protocol {

inline constexpr std::size_t kMaxPayload = 1024;
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kCrcSize = 2;
inline constexpr std::size_t kMinFrame = kHeaderSize + kCrcSize;
inline constexpr std::uint8_t kBroadcast = 0;
inline constexpr std::uint8_t kMaxAddress = 247;
inline constexpr std::uint8_t kExceptionBit = 0x80;

enum class Function : std::uint8_t {
    ReadTelemetry = 0x01,
    WriteDayPlan = 0x02,
    ReadDayPlan = 0x03,
    ReportStatus = 0x04,
    InjectMortality = 0x05,
};

enum class ExceptionCode : std::uint8_t {
    IllegalFunction = 1,
    IllegalDataAddress = 2,
    IllegalDataValue = 3,
    DeviceFailure = 4,
};

const char* to_string(Function f);
const char* to_string(ExceptionCode c);

struct Frame {
    std::uint8_t address = 0;
    std::uint8_t function = 0;
    std::vector<std::uint8_t> payload;

    bool is_exception() const { return (function & kExceptionBit) != 0; }
    /// Exception code carried by an exception reply, if this is one.
    std::optional<ExceptionCode> exception() const;

    bool operator==(const Frame&) const = default;
};

Frame make_request(std::uint8_t address, Function f, std::vector<std::uint8_t> payload = {});
Frame make_exception(const Frame& request, ExceptionCode code);

std::uint16_t crc16(std::span<const std::uint8_t> bytes);

/// Throws Oversize for payloads over kMaxPayload and ProtocolViolation for
/// addresses above kMaxAddress.
std::vector<std::uint8_t> encode_frame(const Frame& f);

/// Decodes exactly one complete frame. The CRC is checked before the length
/// field is trusted, so any corruption of a received buffer (the length bytes
/// included) reports CrcMismatch. Truncated means fewer bytes than the
/// smallest frame, or a buffer whose intact header promises more than it
/// holds; Oversize a checksummed frame declaring more than kMaxPayload.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Hex bytes followed by the decoded fields, one frame per line.
std::string dump_frame(std::span<const std::uint8_t> bytes);

} // namespace flockplan::protocol
