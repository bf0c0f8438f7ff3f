#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace slio {

/// Periodic ego-state broadcast: the sender's pose and velocity in its own
/// global frame.
struct EgoStateMsg {
    std::uint8_t sender_id = 0;
    std::uint32_t seq = 0;
    double timestamp = 0.0;
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();
};

/// Mutual-observation report: the sender saw drone `observed_id` at
/// `pos_body` in the sender's body frame.
struct ObservationMsg {
    std::uint8_t sender_id = 0;
    std::uint32_t seq = 0;
    double timestamp = 0.0;
    std::uint8_t observed_id = 0;
    Eigen::Vector3d pos_body = Eigen::Vector3d::Zero();
};

using Message = std::variant<EgoStateMsg, ObservationMsg>;

// Little-endian layout: magic "SLIO", version u8 = 1, type u8 (1 = ego,
// 2 = obs), then the message fields in declared order (f64 per scalar,
// rotation row-major).
inline constexpr std::size_t kHeaderSize = 6;
inline constexpr std::size_t kEgoMsgSize = kHeaderSize + 1 + 4 + 8 + 72 + 24 + 24;  // 139
inline constexpr std::size_t kObsMsgSize = kHeaderSize + 1 + 4 + 8 + 1 + 24;        // 44
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint8_t kTypeEgo = 1;
inline constexpr std::uint8_t kTypeObs = 2;

struct DecodeError {
    enum class Kind {
        bad_magic,
        unsupported_version,
        unknown_type,
        truncated,
        invalid_field,
    };
    Kind kind = Kind::bad_magic;
    std::size_t offset = 0;  // byte offset where parsing failed
    std::string detail;
};

using DecodeResult = std::variant<Message, DecodeError>;

std::vector<std::uint8_t> encode(const EgoStateMsg& msg);
std::vector<std::uint8_t> encode(const ObservationMsg& msg);
std::vector<std::uint8_t> encode(const Message& msg);

/// Strict parse; never throws on malformed input.
DecodeResult decode(std::span<const std::uint8_t> bytes);

const char* decode_error_name(DecodeError::Kind kind);

}  // namespace slio
