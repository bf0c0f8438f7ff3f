#include "slio/wire.hpp"

#include <Eigen/LU>

#include <cmath>
#include <cstring>

namespace slio {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'L', 'I', 'O'};

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void put_header(std::vector<std::uint8_t>& out, std::uint8_t type) {
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u8(out, kWireVersion);
    put_u8(out, type);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    bool u8(std::uint8_t& v) {
        if (pos_ + 1 > bytes_.size()) return false;
        v = bytes_[pos_++];
        return true;
    }
    bool u32(std::uint32_t& v) {
        if (pos_ + 4 > bytes_.size()) return false;
        v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return true;
    }
    bool f64(double& v) {
        if (pos_ + 8 > bytes_.size()) return false;
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        std::memcpy(&v, &bits, 8);
        return true;
    }
    std::size_t pos() const { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

DecodeError err(DecodeError::Kind kind, std::size_t offset, std::string detail) {
    return {kind, offset, std::move(detail)};
}

bool finite3(const Eigen::Vector3d& v) { return v.allFinite(); }

}  // namespace

std::vector<std::uint8_t> encode(const EgoStateMsg& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(kEgoMsgSize);
    put_header(out, kTypeEgo);
    put_u8(out, msg.sender_id);
    put_u32(out, msg.seq);
    put_f64(out, msg.timestamp);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) put_f64(out, msg.rot(r, c));
    }
    for (int i = 0; i < 3; ++i) put_f64(out, msg.pos(i));
    for (int i = 0; i < 3; ++i) put_f64(out, msg.vel(i));
    return out;
}

std::vector<std::uint8_t> encode(const ObservationMsg& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(kObsMsgSize);
    put_header(out, kTypeObs);
    put_u8(out, msg.sender_id);
    put_u32(out, msg.seq);
    put_f64(out, msg.timestamp);
    put_u8(out, msg.observed_id);
    for (int i = 0; i < 3; ++i) put_f64(out, msg.pos_body(i));
    return out;
}

std::vector<std::uint8_t> encode(const Message& msg) {
    return std::visit([](const auto& m) { return encode(m); }, msg);
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) {
        return err(DecodeError::Kind::truncated, bytes.size(), "short header");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        return err(DecodeError::Kind::bad_magic, 0, "expected magic 'SLIO'");
    }
    if (bytes[4] != kWireVersion) {
        return err(DecodeError::Kind::unsupported_version, 4,
                   "version " + std::to_string(bytes[4]));
    }
    const std::uint8_t type = bytes[5];
    Reader rd(bytes.subspan(kHeaderSize));
    const auto fail_at = [&](std::string what) {
        return err(DecodeError::Kind::truncated, kHeaderSize + rd.pos(), std::move(what));
    };

    if (type == kTypeEgo) {
        if (bytes.size() != kEgoMsgSize) {
            return err(DecodeError::Kind::truncated, bytes.size(), "ego message must be 139 bytes");
        }
        EgoStateMsg m;
        if (!rd.u8(m.sender_id)) return fail_at("sender_id");
        if (!rd.u32(m.seq)) return fail_at("seq");
        if (!rd.f64(m.timestamp)) return fail_at("timestamp");
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                if (!rd.f64(m.rot(r, c))) return fail_at("rot");
            }
        }
        for (int i = 0; i < 3; ++i) {
            if (!rd.f64(m.pos(i))) return fail_at("pos");
        }
        for (int i = 0; i < 3; ++i) {
            if (!rd.f64(m.vel(i))) return fail_at("vel");
        }
        if (!std::isfinite(m.timestamp) || !m.rot.allFinite() || !finite3(m.pos) ||
            !finite3(m.vel)) {
            return err(DecodeError::Kind::invalid_field, kHeaderSize, "non-finite field");
        }
        const double ortho =
            (m.rot * m.rot.transpose() - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>();
        if (ortho > 1e-6 || std::abs(m.rot.determinant() - 1.0) > 1e-6) {
            return err(DecodeError::Kind::invalid_field, kHeaderSize + 13,
                       "rotation not orthonormal");
        }
        return Message(m);
    }
    if (type == kTypeObs) {
        if (bytes.size() != kObsMsgSize) {
            return err(DecodeError::Kind::truncated, bytes.size(), "obs message must be 44 bytes");
        }
        ObservationMsg m;
        if (!rd.u8(m.sender_id)) return fail_at("sender_id");
        if (!rd.u32(m.seq)) return fail_at("seq");
        if (!rd.f64(m.timestamp)) return fail_at("timestamp");
        if (!rd.u8(m.observed_id)) return fail_at("observed_id");
        for (int i = 0; i < 3; ++i) {
            if (!rd.f64(m.pos_body(i))) return fail_at("pos_body");
        }
        if (!std::isfinite(m.timestamp) || !finite3(m.pos_body)) {
            return err(DecodeError::Kind::invalid_field, kHeaderSize, "non-finite field");
        }
        if (m.observed_id == m.sender_id) {
            return err(DecodeError::Kind::invalid_field, kHeaderSize + 13,
                       "observed_id equals sender_id");
        }
        return Message(m);
    }
    return err(DecodeError::Kind::unknown_type, 5, "type " + std::to_string(type));
}

const char* decode_error_name(DecodeError::Kind kind) {
    switch (kind) {
        case DecodeError::Kind::bad_magic: return "bad_magic";
        case DecodeError::Kind::unsupported_version: return "unsupported_version";
        case DecodeError::Kind::unknown_type: return "unknown_type";
        case DecodeError::Kind::truncated: return "truncated";
        case DecodeError::Kind::invalid_field: return "invalid_field";
    }
    return "unknown";
}

}  // namespace slio
