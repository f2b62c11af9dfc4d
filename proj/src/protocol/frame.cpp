#include "flockplan/protocol/frame.hpp"

#include <fmt/format.h>

namespace flockplan::protocol {

const char* to_string(Function f) {
    switch (f) {
    case Function::ReadTelemetry: return "READ_TELEMETRY";
    case Function::WriteDayPlan: return "WRITE_DAY_PLAN";
    case Function::ReadDayPlan: return "READ_DAY_PLAN";
    case Function::ReportStatus: return "REPORT_STATUS";
    case Function::InjectMortality: return "INJECT_MORTALITY";
    }
    return "UNKNOWN";
}

const char* to_string(ExceptionCode c) {
    switch (c) {
    case ExceptionCode::IllegalFunction: return "IllegalFunction";
    case ExceptionCode::IllegalDataAddress: return "IllegalDataAddress";
    case ExceptionCode::IllegalDataValue: return "IllegalDataValue";
    case ExceptionCode::DeviceFailure: return "DeviceFailure";
    }
    return "Unknown";
}

std::optional<ExceptionCode> Frame::exception() const {
    if (!is_exception() || payload.empty()) return std::nullopt;
    return static_cast<ExceptionCode>(payload[0]);
}

Frame make_request(std::uint8_t address, Function f, std::vector<std::uint8_t> payload) {
    return Frame{address, static_cast<std::uint8_t>(f), std::move(payload)};
}

Frame make_exception(const Frame& request, ExceptionCode code) {
    return Frame{request.address, static_cast<std::uint8_t>(request.function | kExceptionBit),
                 {static_cast<std::uint8_t>(code)}};
}

std::uint16_t crc16(std::span<const std::uint8_t> bytes) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t b : bytes) {
        crc ^= b;
        for (int k = 0; k < 8; ++k) crc = (crc & 1) ? static_cast<std::uint16_t>((crc >> 1) ^ 0xA001) : crc >> 1;
    }
    return crc;
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.payload.size() > kMaxPayload)
        throw Oversize(fmt::format("payload of {} bytes exceeds {}", f.payload.size(), kMaxPayload));
    if (f.address > kMaxAddress) throw ProtocolViolation(fmt::format("address {} out of range", f.address));
    std::vector<std::uint8_t> out;
    out.reserve(kMinFrame + f.payload.size());
    out.push_back(f.address);
    out.push_back(f.function);
    out.push_back(static_cast<std::uint8_t>(f.payload.size() >> 8));
    out.push_back(static_cast<std::uint8_t>(f.payload.size() & 0xFF));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    const std::uint16_t crc = crc16(out);
    out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
    out.push_back(static_cast<std::uint8_t>(crc >> 8));
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMinFrame) throw Truncated(fmt::format("{} bytes is shorter than any frame", bytes.size()));
    const std::size_t n = bytes.size();
    const std::uint16_t wire = static_cast<std::uint16_t>(bytes[n - 2] | (bytes[n - 1] << 8));
    const std::uint16_t calc = crc16(bytes.first(n - kCrcSize));
    if (wire != calc) throw CrcMismatch(fmt::format("crc {:04x} on wire, {:04x} computed", wire, calc));
    const std::size_t len = (static_cast<std::size_t>(bytes[2]) << 8) | bytes[3];
    if (len > kMaxPayload) throw Oversize(fmt::format("declared payload of {} bytes exceeds {}", len, kMaxPayload));
    if (len > n - kMinFrame) throw Truncated(fmt::format("header declares {} payload bytes, {} present", len, n - kMinFrame));
    if (len < n - kMinFrame) throw ProtocolViolation(fmt::format("{} bytes after the declared payload", n - kMinFrame - len));
    Frame f;
    f.address = bytes[0];
    f.function = bytes[1];
    f.payload.assign(bytes.begin() + kHeaderSize, bytes.begin() + kHeaderSize + static_cast<std::ptrdiff_t>(len));
    return f;
}

std::string dump_frame(std::span<const std::uint8_t> bytes) {
    std::string out;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (i) out += ' ';
        out += fmt::format("{:02x}", bytes[i]);
    }
    try {
        Frame f = decode_frame(bytes);
        std::string name;
        if (f.is_exception()) {
            auto code = f.exception();
            name = fmt::format("EXCEPTION({}) {}", to_string(static_cast<Function>(f.function & ~kExceptionBit)),
                               code ? to_string(*code) : "?");
        } else {
            name = to_string(static_cast<Function>(f.function));
        }
        out += fmt::format(" | addr={} fn=0x{:02x} {} len={} crc ok", f.address, f.function, name, f.payload.size());
    } catch (const Error& e) {
        out += fmt::format(" | {}: {}", e.kind(), e.what());
    }
    return out;
}

} // namespace flockplan::protocol
