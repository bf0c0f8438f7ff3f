#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "slio/agent.hpp"
#include "slio/metrics.hpp"
#include "slio/scenario.hpp"

namespace slio {

struct RunOptions {
    std::string out_dir;  // empty: keep results in memory only
    int threads = 0;      // 0 = single-threaded event loop, N = agent threads
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::optional<std::string> mode;
};

struct ScanRow {
    double t = 0.0;
    int drone = 0;
    Pose est;
    Pose gt;
    int point_residuals = 0;
    int active_residuals = 0;
    int passive_residuals = 0;
    int trackers = 0;
    int identified = 0;
    int iterations = 0;
    bool converged = false;
    bool fell_back = false;
};

struct ExtrinsicRow {
    double t = 0.0;
    int drone = 0;
    int teammate = 0;
    double rot_err_deg = 0.0;
    double trans_err_m = 0.0;
};

struct ExtrinsicReport {
    int teammate_id = -1;
    bool initialized = false;
    double rot_err_deg = 0.0;
    double trans_err_m = 0.0;
};

struct TrackerSnapshot {
    int tracker_id = 0;
    bool teammate = false;
    int teammate_id = -1;
    Eigen::Vector3d pos_global = Eigen::Vector3d::Zero();
    double last_visual_update = -1.0;
};

struct DroneReport {
    int id = 0;
    double rmse = 0.0;
    int scans = 0;
    double mean_proc_ms = 0.0;
    double max_proc_ms = 0.0;
    std::uint64_t bytes_sent = 0;
    double bytes_per_s = 0.0;
    int fell_back_scans = 0;
    std::map<int, double> identified_at;
    std::vector<ReacqEvent> reacq_events;
    std::vector<ExtrinsicReport> extrinsics;
    std::vector<TrackerSnapshot> trackers;  // state at end of run
};

struct RunReport {
    std::uint64_t seed = 0;
    double duration = 0.0;
    std::string mode;
    int threads = 0;
    std::vector<DroneReport> drones;
    std::vector<ScanRow> rows;
    std::vector<ExtrinsicRow> extrinsic_rows;

    nlohmann::json to_json() const;
    const DroneReport& drone(int id) const;
};

/// Virtual-time scenario run: IMU prediction, scan-end pipeline, two-phase
/// message exchange per scan slice. Deterministic for a given (config,
/// seed) in both single-threaded and threaded modes.
RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options);

RunReport run_scenario_file(const std::string& config_path, const RunOptions& options);

/// `report` subcommand: reload a run directory, recompute the RMSE from the
/// CSV rows and print a per-drone summary. Returns a process exit code.
int print_report(const std::string& run_dir);

/// `dump-msgs` subcommand: hex-dump a JSON-lines message capture, decode
/// each record and verify the encode round trip. Returns a process exit
/// code (nonzero on any decode or round-trip failure).
int dump_messages(const std::string& capture_path);

struct FuzzStats {
    std::uint64_t total = 0;
    std::uint64_t decoded = 0;
    std::uint64_t errors = 0;
};

/// Feed `count` randomized buffers to the wire decoder; every input must
/// classify as a message or a structured error (a crash fails the caller).
FuzzStats fuzz_decode(std::uint64_t count, std::uint64_t seed);

}  // namespace slio
