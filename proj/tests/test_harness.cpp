#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "slio/runner.hpp"

using namespace slio;
using nlohmann::json;

namespace {

json room_world() {
    return json{{"preset", "room"},
                {"size", {14.0, 12.0, 4.0}},
                {"boxes", json::array({json{{"center", {4.0, 3.0, 0.75}},
                                            {"size", {1.5, 1.0, 1.5}},
                                            {"reflectivity", 60}},
                                       json{{"center", {-4.0, -3.0, 0.6}},
                                            {"size", {1.2, 1.8, 1.2}},
                                            {"reflectivity", 80}}})}};
}

json circle_drone(int id, double cx, double cy, double phase_deg, int points = 2000) {
    return json{{"id", id},
                {"sensor", {{"points_per_scan", points}}},
                {"trajectory",
                 {{"type", "circle"},
                  {"center", {cx, cy, 1.5}},
                  {"radius", 1.2},
                  {"omega", 0.8},
                  {"phase_deg", phase_deg},
                  {"yaw_mode", "tangent"},
                  {"ramp", 2.0}}}};
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("single drone in a rich room: RMSE below 0.1 m") {
    json cfg = {{"seed", 7},
                {"duration", 12.0},
                {"world", room_world()},
                {"drones", json::array({circle_drone(1, 0.0, 0.0, 0.0)})}};
    const RunReport rep = run_scenario(parse_scenario(cfg), {});
    REQUIRE(rep.drones.size() == 1);
    CHECK(rep.drones[0].scans > 100);
    CHECK(rep.drones[0].rmse < 0.1);
    CHECK(rep.drones[0].fell_back_scans <= 1);
}

TEST_CASE("same config and seed give byte-identical CSV outputs") {
    json cfg = {{"seed", 9},
                {"duration", 6.0},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -1.5, 0.0, 0.0),
                              circle_drone(2, 2.5, 0.0, 180.0)})},
                {"channel", {{"drop_prob", 0.1}, {"delay_mean", 0.02}, {"delay_jitter", 0.01}}}};
    const auto dir_a = std::filesystem::temp_directory_path() / "slio_det_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "slio_det_b";
    RunOptions opt_a;
    opt_a.out_dir = dir_a.string();
    RunOptions opt_b;
    opt_b.out_dir = dir_b.string();
    run_scenario(parse_scenario(cfg), opt_a);
    run_scenario(parse_scenario(cfg), opt_b);
    CHECK(read_file(dir_a / "run.csv") == read_file(dir_b / "run.csv"));
    CHECK(read_file(dir_a / "extrinsics.csv") == read_file(dir_b / "extrinsics.csv"));
}

TEST_CASE("threaded mode reproduces the single-threaded trace") {
    json cfg = {{"seed", 21},
                {"duration", 6.0},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -1.5, 0.0, 0.0),
                              circle_drone(2, 2.5, 0.0, 180.0)})}};
    const RunReport single = run_scenario(parse_scenario(cfg), {});
    RunOptions threaded;
    threaded.threads = 2;
    const RunReport multi = run_scenario(parse_scenario(cfg), threaded);
    REQUIRE(single.rows.size() == multi.rows.size());
    for (size_t i = 0; i < single.rows.size(); ++i) {
        CHECK(single.rows[i].t == multi.rows[i].t);
        CHECK(single.rows[i].drone == multi.rows[i].drone);
        CHECK((single.rows[i].est.pos - multi.rows[i].est.pos).norm() == 0.0);
        CHECK(single.rows[i].point_residuals == multi.rows[i].point_residuals);
        CHECK(single.rows[i].passive_residuals == multi.rows[i].passive_residuals);
    }
}

TEST_CASE("solo mode runs a pure-LIO residual set") {
    json cfg = {{"seed", 5},
                {"duration", 8.0},
                {"mode", "solo"},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -1.5, 0.0, 0.0),
                              circle_drone(2, 2.5, 0.0, 180.0)})}};
    const RunReport rep = run_scenario(parse_scenario(cfg), {});
    for (const auto& row : rep.rows) {
        CHECK(row.active_residuals == 0);
        CHECK(row.passive_residuals == 0);
        CHECK(row.identified == 0);
    }
}

TEST_CASE("two drones identify each other and estimate the extrinsic") {
    json cfg = {{"seed", 31},
                {"duration", 15.0},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -1.6, 0.0, 0.0, 3000),
                              circle_drone(2, 2.4, 0.5, 120.0, 3000)})}};
    const RunReport rep = run_scenario(parse_scenario(cfg), {});
    for (const auto& d : rep.drones) {
        REQUIRE(d.identified_at.size() == 1);
        CHECK(d.identified_at.begin()->second < 12.0);
        REQUIRE(d.extrinsics.size() == 1);
        CHECK(d.extrinsics[0].initialized);
        CHECK(d.extrinsics[0].trans_err_m < 0.2);
        CHECK(d.extrinsics[0].rot_err_deg < 5.0);
    }
    // Once identified, mutual observations flow both ways.
    int active_rows = 0, passive_rows = 0;
    for (const auto& row : rep.rows) {
        active_rows += row.active_residuals;
        passive_rows += row.passive_residuals;
    }
    CHECK(active_rows > 20);
    CHECK(passive_rows > 20);
}

TEST_CASE("clock offset beyond the association tolerance blocks identification") {
    json cfg = {{"seed", 31},
                {"duration", 10.0},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -1.6, 0.0, 0.0, 3000),
                              circle_drone(2, 2.4, 0.5, 120.0, 3000)})}};
    cfg["drones"][1]["clock_offset"] = 0.06;  // > 25 ms tolerance
    const RunReport rep = run_scenario(parse_scenario(cfg), {});
    CHECK(rep.drone(1).identified_at.empty());
}

TEST_CASE("bandwidth stays under 3 KB/s per drone at 10 Hz with 3 drones") {
    json cfg = {{"seed", 3},
                {"duration", 10.0},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -1.6, 0.0, 0.0),
                              circle_drone(2, 2.4, 0.5, 120.0),
                              circle_drone(3, 0.4, -2.5, 240.0)})}};
    const RunReport rep = run_scenario(parse_scenario(cfg), {});
    for (const auto& d : rep.drones) {
        CHECK(d.bytes_per_s > 0.0);
        CHECK(d.bytes_per_s < 3000.0);
    }
}

TEST_CASE("incidence attenuation: re-clustering keeps the teammate tracked") {
    json cfg = {{"seed", 17},
                {"duration", 12.0},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -2.0, 0.0, 0.0, 4000),
                              circle_drone(2, 2.6, 0.0, 180.0, 4000)})}};
    for (auto& d : cfg["drones"]) d["sensor"]["incidence_attenuation"] = true;
    const RunReport rep = run_scenario(parse_scenario(cfg), {});

    // Drone 1 must still be tracking drone 2 at the end, near the truth.
    const ScenarioConfig scfg = parse_scenario(cfg);
    const Pose origin1 = scfg.drones[0].trajectory->pose(0.0);
    const Eigen::Vector3d true2 =
        origin1.apply_inverse(scfg.drones[1].trajectory->position(12.0));
    bool found = false;
    for (const auto& tr : rep.drone(1).trackers) {
        if ((tr.pos_global - true2).norm() < 0.3) found = true;
    }
    CHECK(found);
}

TEST_CASE("message capture round-trips through dump-msgs") {
    json cfg = {{"seed", 2},
                {"duration", 3.0},
                {"capture_messages", true},
                {"world", room_world()},
                {"drones",
                 json::array({circle_drone(1, -1.5, 0.0, 0.0),
                              circle_drone(2, 2.5, 0.0, 180.0)})}};
    const auto dir = std::filesystem::temp_directory_path() / "slio_capture";
    RunOptions opt;
    opt.out_dir = dir.string();
    run_scenario(parse_scenario(cfg), opt);
    REQUIRE(std::filesystem::exists(dir / "capture.jsonl"));
    CHECK(dump_messages((dir / "capture.jsonl").string()) == 0);
    CHECK(print_report(dir.string()) == 0);
}
