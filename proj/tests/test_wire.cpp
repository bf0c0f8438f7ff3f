#include <doctest.h>

#include "slio/rng.hpp"
#include "slio/runner.hpp"
#include "slio/so3.hpp"
#include "slio/wire.hpp"

using namespace slio;

namespace {

EgoStateMsg random_ego(Rng& rng) {
    EgoStateMsg m;
    m.sender_id = static_cast<std::uint8_t>(rng.uniform_index(256));
    m.seq = static_cast<std::uint32_t>(rng.next_u64());
    m.timestamp = rng.uniform(0.0, 1e4);
    m.rot = so3_exp<double>(Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
    m.pos = Eigen::Vector3d(rng.normal(10.0), rng.normal(10.0), rng.normal(10.0));
    m.vel = Eigen::Vector3d(rng.normal(2.0), rng.normal(2.0), rng.normal(2.0));
    return m;
}

ObservationMsg random_obs(Rng& rng) {
    ObservationMsg m;
    m.sender_id = static_cast<std::uint8_t>(rng.uniform_index(256));
    m.observed_id = static_cast<std::uint8_t>((m.sender_id + 1 + rng.uniform_index(255)) % 256);
    m.seq = static_cast<std::uint32_t>(rng.next_u64());
    m.timestamp = rng.uniform(0.0, 1e4);
    m.pos_body = Eigen::Vector3d(rng.normal(5.0), rng.normal(5.0), rng.normal(5.0));
    return m;
}

}  // namespace

TEST_CASE("header layout and message sizes") {
    EgoStateMsg ego;
    ego.sender_id = 2;
    const auto bytes = encode(ego);
    REQUIRE(bytes.size() == kEgoMsgSize);
    CHECK(bytes[0] == 0x53);  // 'S'
    CHECK(bytes[1] == 0x4C);  // 'L'
    CHECK(bytes[2] == 0x49);  // 'I'
    CHECK(bytes[3] == 0x4F);  // 'O'
    CHECK(bytes[4] == 0x01);  // version
    CHECK(bytes[5] == 0x01);  // ego type
    CHECK(bytes[6] == 0x02);  // sender

    ObservationMsg obs;
    obs.observed_id = 1;
    CHECK(encode(obs).size() == kObsMsgSize);
}

TEST_CASE("roundtrip is bit-exact for 1000 random messages") {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
        Message msg;
        if (i % 2 == 0) {
            msg = random_ego(rng);
        } else {
            msg = random_obs(rng);
        }
        const auto bytes = encode(msg);
        const DecodeResult res = decode(bytes);
        REQUIRE(std::holds_alternative<Message>(res));
        CHECK(encode(std::get<Message>(res)) == bytes);
    }
}

TEST_CASE("decode rejects malformed inputs with structured errors") {
    EgoStateMsg ego;
    auto bytes = encode(ego);

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        const auto res = decode(bytes);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res).kind == DecodeError::Kind::bad_magic);
    }
    SUBCASE("unsupported version") {
        bytes[4] = 2;
        const auto res = decode(bytes);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        const auto& err = std::get<DecodeError>(res);
        CHECK(err.kind == DecodeError::Kind::unsupported_version);
        CHECK(err.offset == 4);
    }
    SUBCASE("unknown type") {
        bytes[5] = 9;
        const auto res = decode(bytes);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res).kind == DecodeError::Kind::unknown_type);
    }
    SUBCASE("truncated") {
        bytes.resize(bytes.size() - 1);
        const auto res = decode(bytes);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res).kind == DecodeError::Kind::truncated);
    }
    SUBCASE("non-orthonormal rotation") {
        // Corrupt the exponent of rot(0,0) (rot starts at byte 19).
        bytes[19 + 6] ^= 0x40;
        const auto res = decode(bytes);
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res).kind == DecodeError::Kind::invalid_field);
    }
    SUBCASE("self-observation") {
        ObservationMsg obs;
        obs.sender_id = 3;
        obs.observed_id = 3;
        const auto res = decode(encode(obs));
        REQUIRE(std::holds_alternative<DecodeError>(res));
        CHECK(std::get<DecodeError>(res).kind == DecodeError::Kind::invalid_field);
    }
}

TEST_CASE("fuzz: 100k random buffers classify without crashing") {
    const FuzzStats stats = fuzz_decode(100000, 99);
    CHECK(stats.total == 100000);
    CHECK(stats.decoded + stats.errors == stats.total);
}
