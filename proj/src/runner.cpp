#include "slio/runner.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Geometry>
#include <algorithm>
#include <barrier>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "slio/wire.hpp"

namespace slio {

using nlohmann::json;

namespace {

constexpr double kGravity = 9.81;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9e", v);
    return buf;
}

std::string pose_csv(const Pose& p) {
    Eigen::Quaterniond q(p.rot);
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    std::string out = fmt_double(p.pos.x()) + "," + fmt_double(p.pos.y()) + "," +
                      fmt_double(p.pos.z()) + "," + fmt_double(q.w()) + "," +
                      fmt_double(q.x()) + "," + fmt_double(q.y()) + "," + fmt_double(q.z());
    return out;
}

std::string hex_encode(std::span<const std::uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::vector<std::uint8_t> hex_decode(const std::string& hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::vector<std::uint8_t> out;
    if (hex.size() % 2 != 0) return out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return {};
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

struct DroneRuntime {
    const DroneConfig* cfg = nullptr;
    std::unique_ptr<Agent> agent;
    Rng imu_rng{0}, scan_rng{0}, walk_rng{0};
    Eigen::Vector3d bias_gyro = Eigen::Vector3d::Zero();
    Eigen::Vector3d bias_acc = Eigen::Vector3d::Zero();
    Pose origin;
    Pose gt_origin_inv;
    long imu_count = 0;
    std::vector<ScanRow> rows;
    std::vector<ExtrinsicRow> ext_rows;
    std::vector<double> proc_ms;
    std::vector<std::pair<double, Eigen::Vector3d>> est_positions;
    int fell_back = 0;
};

}  // namespace

RunReport run_scenario(const ScenarioConfig& config_in, const RunOptions& options) {
    ScenarioConfig config = config_in;
    if (options.seed) {
        config.seed = *options.seed;
        config.channel.seed = *options.seed;
    }
    if (options.duration) config.duration = *options.duration;
    if (options.mode) config.mode = *options.mode;

    const double period = config.agent_defaults.scan_period;
    const int n_slices = static_cast<int>(std::floor(config.duration / period + 1e-9));
    const std::vector<TrueTrajectory> trajs = true_trajectories(config);

    SimBus bus(config.channel);
    bus.enable_capture(config.capture_messages);
    for (const auto& d : config.drones) bus.register_drone(d.id);

    const Eigen::Vector3d gravity_world(0.0, 0.0, -kGravity);

    std::vector<DroneRuntime> rts(config.drones.size());
    for (size_t i = 0; i < config.drones.size(); ++i) {
        const DroneConfig& dc = config.drones[i];
        DroneRuntime& rt = rts[i];
        rt.cfg = &dc;
        AgentParams ap = config.agent_defaults;
        ap.drone_id = dc.id;
        ap.clock_offset = dc.clock_offset;
        ap.mutual_obs = drone_mutual_obs(config, dc);
        for (const auto& other : config.drones) {
            if (other.id != dc.id) ap.teammate_ids.push_back(other.id);
        }
        // Keep the filter's process noise consistent with the simulated IMU.
        ap.esikf.gyro_noise = dc.sensor.gyro_noise;
        ap.esikf.accel_noise = dc.sensor.accel_noise;
        ap.esikf.bias_gyro_walk = dc.sensor.bias_gyro_walk;
        ap.esikf.bias_acc_walk = dc.sensor.bias_acc_walk;
        rt.agent = std::make_unique<Agent>(ap);

        // Independent per-drone streams keep threaded runs reproducible.
        rt.imu_rng = Rng::derive(config.seed, 0x100 + dc.id);
        rt.scan_rng = Rng::derive(config.seed, 0x200 + dc.id);
        rt.walk_rng = Rng::derive(config.seed, 0x300 + dc.id);
        Rng bias_rng = Rng::derive(config.seed, 0x400 + dc.id);
        for (int k = 0; k < 3; ++k) {
            rt.bias_gyro(k) = bias_rng.normal(dc.init_bias_gyro_sigma);
            rt.bias_acc(k) = bias_rng.normal(dc.init_bias_acc_sigma);
        }
        rt.origin = dc.trajectory->pose(0.0);
        rt.gt_origin_inv = rt.origin.inverse();
    }

    std::vector<std::vector<std::vector<std::uint8_t>>> outboxes(rts.size());

    auto phase_receive_and_process = [&](size_t i, int slice) {
        DroneRuntime& rt = rts[i];
        const double t_end = slice * period;
        const double t_begin = t_end - period;
        for (const Delivery& d : bus.poll(rt.cfg->id, t_end)) rt.agent->deliver(d);

        // IMU samples due in this slice, with true-bias random walk.
        const double dt_imu = 1.0 / rt.cfg->sensor.imu_rate;
        while ((rt.imu_count + 1) * dt_imu <= t_end + 1e-9) {
            ++rt.imu_count;
            const double t = rt.imu_count * dt_imu;
            for (int k = 0; k < 3; ++k) {
                rt.bias_gyro(k) +=
                    rt.walk_rng.normal(rt.cfg->sensor.bias_gyro_walk) * std::sqrt(dt_imu);
                rt.bias_acc(k) +=
                    rt.walk_rng.normal(rt.cfg->sensor.bias_acc_walk) * std::sqrt(dt_imu);
            }
            rt.agent->on_imu(synth_imu(*rt.cfg->trajectory, t, rt.bias_gyro, rt.bias_acc,
                                       gravity_world, rt.cfg->sensor, rt.imu_rng));
        }

        const LidarScan scan = synth_scan(config.world, trajs, rt.cfg->id, t_begin, t_end,
                                          rt.cfg->sensor, rt.scan_rng);
        outboxes[i].clear();
        const ScanRecord rec = rt.agent->on_scan(scan, outboxes[i]);
        if (!rec.processed) return;

        ScanRow row;
        row.t = t_end;
        row.drone = rt.cfg->id;
        row.est = rec.est;
        row.gt = rt.gt_origin_inv.compose(rt.cfg->trajectory->pose(t_end));
        row.point_residuals = rec.point_residuals;
        row.active_residuals = rec.active_residuals;
        row.passive_residuals = rec.passive_residuals;
        row.trackers = rec.trackers_alive;
        row.identified = rec.teammates_identified;
        row.iterations = rec.iterations;
        row.converged = rec.converged;
        row.fell_back = rec.undistort_fell_back;
        rt.rows.push_back(row);
        rt.proc_ms.push_back(rec.proc_ms);
        rt.est_positions.emplace_back(t_end, rec.est.pos);
        if (rec.undistort_fell_back) ++rt.fell_back;

        const SwarmState& st = rt.agent->filter().state();
        for (const auto& ext : st.extrinsics) {
            if (!ext.initialized) continue;
            for (const auto& other : rts) {
                if (other.cfg->id != ext.teammate_id) continue;
                const Pose gt_ext = rt.gt_origin_inv.compose(other.origin);
                const auto [deg, m] =
                    compute_extrinsic_error(ext.rot, ext.pos, gt_ext.rot, gt_ext.pos);
                rt.ext_rows.push_back({t_end, rt.cfg->id, ext.teammate_id, deg, m});
            }
        }
    };

    auto phase_send = [&](size_t i, int slice) {
        const double t_end = slice * period;
        for (const auto& bytes : outboxes[i]) bus.send(rts[i].cfg->id, bytes, t_end);
    };

    if (options.threads > 0) {
        std::barrier sync(static_cast<std::ptrdiff_t>(rts.size()));
        std::vector<std::thread> workers;
        workers.reserve(rts.size());
        for (size_t i = 0; i < rts.size(); ++i) {
            workers.emplace_back([&, i] {
                for (int slice = 1; slice <= n_slices; ++slice) {
                    phase_receive_and_process(i, slice);
                    sync.arrive_and_wait();
                    phase_send(i, slice);
                    sync.arrive_and_wait();
                }
            });
        }
        for (auto& w : workers) w.join();
    } else {
        for (int slice = 1; slice <= n_slices; ++slice) {
            for (size_t i = 0; i < rts.size(); ++i) phase_receive_and_process(i, slice);
            for (size_t i = 0; i < rts.size(); ++i) phase_send(i, slice);
        }
    }

    RunReport report;
    report.seed = config.seed;
    report.duration = config.duration;
    report.mode = config.mode;
    report.threads = options.threads;

    for (auto& rt : rts) {
        DroneReport dr;
        dr.id = rt.cfg->id;
        dr.scans = static_cast<int>(rt.rows.size());
        if (!rt.est_positions.empty()) {
            dr.rmse = compute_rmse(rt.est_positions, *rt.cfg->trajectory, rt.origin);
        }
        if (!rt.proc_ms.empty()) {
            double sum = 0.0;
            for (double v : rt.proc_ms) {
                sum += v;
                dr.max_proc_ms = std::max(dr.max_proc_ms, v);
            }
            dr.mean_proc_ms = sum / static_cast<double>(rt.proc_ms.size());
        }
        dr.bytes_sent = bus.bytes_sent(rt.cfg->id);
        dr.bytes_per_s = static_cast<double>(dr.bytes_sent) / config.duration;
        dr.fell_back_scans = rt.fell_back;
        dr.identified_at = rt.agent->identified_at();
        dr.reacq_events = rt.agent->reacq_events();
        for (const auto& tr : rt.agent->trackers()) {
            dr.trackers.push_back({tr.tracker_id, tr.kind == TrackerKind::teammate,
                                   tr.teammate_id, tr.pos_global, tr.last_visual_update_time});
        }
        const SwarmState& st = rt.agent->filter().state();
        for (const auto& ext : st.extrinsics) {
            ExtrinsicReport er;
            er.teammate_id = ext.teammate_id;
            er.initialized = ext.initialized;
            if (ext.initialized) {
                for (const auto& other : rts) {
                    if (other.cfg->id != ext.teammate_id) continue;
                    const Pose gt_ext = rt.gt_origin_inv.compose(other.origin);
                    std::tie(er.rot_err_deg, er.trans_err_m) =
                        compute_extrinsic_error(ext.rot, ext.pos, gt_ext.rot, gt_ext.pos);
                }
            }
            dr.extrinsics.push_back(er);
        }
        report.drones.push_back(std::move(dr));
        report.rows.insert(report.rows.end(), rt.rows.begin(), rt.rows.end());
        report.extrinsic_rows.insert(report.extrinsic_rows.end(), rt.ext_rows.begin(),
                                     rt.ext_rows.end());
    }

    std::stable_sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.drone < b.drone;
    });
    std::stable_sort(report.extrinsic_rows.begin(), report.extrinsic_rows.end(),
                     [](const auto& a, const auto& b) {
                         if (a.t != b.t) return a.t < b.t;
                         if (a.drone != b.drone) return a.drone < b.drone;
                         return a.teammate < b.teammate;
                     });

    if (!options.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(options.out_dir);

        std::ofstream csv(fs::path(options.out_dir) / "run.csv");
        csv << "t,drone,est_px,est_py,est_pz,est_qw,est_qx,est_qy,est_qz,"
               "gt_px,gt_py,gt_pz,gt_qw,gt_qx,gt_qy,gt_qz,"
               "n_point,n_active,n_passive,trackers,identified,iterations,converged,fell_back\n";
        for (const auto& r : report.rows) {
            csv << fmt_double(r.t) << ',' << r.drone << ',' << pose_csv(r.est) << ','
                << pose_csv(r.gt) << ',' << r.point_residuals << ',' << r.active_residuals
                << ',' << r.passive_residuals << ',' << r.trackers << ',' << r.identified << ','
                << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << (r.fell_back ? 1 : 0)
                << '\n';
        }

        std::ofstream ecsv(fs::path(options.out_dir) / "extrinsics.csv");
        ecsv << "t,drone,teammate,rot_err_deg,trans_err_m\n";
        for (const auto& r : report.extrinsic_rows) {
            ecsv << fmt_double(r.t) << ',' << r.drone << ',' << r.teammate << ','
                 << fmt_double(r.rot_err_deg) << ',' << fmt_double(r.trans_err_m) << '\n';
        }

        std::ofstream js(fs::path(options.out_dir) / "summary.json");
        js << report.to_json().dump(2) << '\n';

        if (config.capture_messages) {
            std::ofstream cap(fs::path(options.out_dir) / "capture.jsonl");
            for (const Delivery& d : bus.capture_log()) {
                json line = {{"send_time", d.send_time},   {"arrival_time", d.arrival_time},
                             {"from", d.from_id},          {"to", d.to_id},
                             {"seq", d.bus_seq},           {"bytes_hex", hex_encode(d.bytes)}};
                cap << line.dump() << '\n';
            }
        }
    }
    return report;
}

RunReport run_scenario_file(const std::string& config_path, const RunOptions& options) {
    return run_scenario(load_scenario(config_path), options);
}

json RunReport::to_json() const {
    json drones_json = json::array();
    for (const auto& d : drones) {
        json ident = json::object();
        for (const auto& [id, t] : d.identified_at) ident[std::to_string(id)] = t;
        json reacq = json::array();
        for (const auto& e : d.reacq_events) {
            reacq.push_back({{"t", e.t},
                             {"teammate", e.teammate_id},
                             {"gap_s", e.gap_s},
                             {"innovation_m", e.innovation_m}});
        }
        json exts = json::array();
        for (const auto& e : d.extrinsics) {
            exts.push_back({{"teammate", e.teammate_id},
                            {"initialized", e.initialized},
                            {"rot_err_deg", e.rot_err_deg},
                            {"trans_err_m", e.trans_err_m}});
        }
        drones_json.push_back({{"id", d.id},
                               {"rmse_m", d.rmse},
                               {"scans", d.scans},
                               {"bytes_sent", d.bytes_sent},
                               {"bytes_per_s", d.bytes_per_s},
                               {"fell_back_scans", d.fell_back_scans},
                               {"identified_at", ident},
                               {"reacq_events", reacq},
                               {"extrinsics", exts},
                               {"timing", {{"mean_ms", d.mean_proc_ms},
                                           {"max_ms", d.max_proc_ms},
                                           {"note", "wall-clock, not deterministic"}}}});
    }
    return json{{"schema_version", 1},
                {"seed", seed},
                {"duration_s", duration},
                {"mode", mode},
                {"threads", threads},
                {"drones", drones_json}};
}

const DroneReport& RunReport::drone(int id) const {
    for (const auto& d : drones) {
        if (d.id == id) return d;
    }
    throw std::out_of_range("RunReport: no such drone id");
}

int print_report(const std::string& run_dir) {
    namespace fs = std::filesystem;
    std::ifstream js(fs::path(run_dir) / "summary.json");
    if (!js) {
        std::fprintf(stderr, "report: cannot open %s/summary.json\n", run_dir.c_str());
        return 1;
    }
    json summary;
    js >> summary;

    // Recompute RMSE from the CSV as an independent check of the summary.
    std::ifstream csv(fs::path(run_dir) / "run.csv");
    if (!csv) {
        std::fprintf(stderr, "report: cannot open %s/run.csv\n", run_dir.c_str());
        return 1;
    }
    std::string line;
    std::getline(csv, line);  // header
    std::map<int, std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>> per_drone;
    while (std::getline(csv, line)) {
        std::vector<double> vals;
        size_t start = 0;
        while (start <= line.size()) {
            const size_t comma = line.find(',', start);
            const std::string tok = line.substr(start, comma - start);
            vals.push_back(std::strtod(tok.c_str(), nullptr));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (vals.size() < 16) continue;
        per_drone[static_cast<int>(vals[1])].push_back(
            {{vals[2], vals[3], vals[4]}, {vals[9], vals[10], vals[11]}});
    }

    std::printf("run: seed=%" PRIu64 " duration=%.1fs mode=%s\n",
                summary.value("seed", std::uint64_t(0)), summary.value("duration_s", 0.0),
                summary.value("mode", std::string("?")).c_str());
    for (const auto& d : summary.at("drones")) {
        const int id = d.at("id").get<int>();
        double csv_rmse = std::numeric_limits<double>::quiet_NaN();
        if (per_drone.count(id) && !per_drone[id].empty()) {
            csv_rmse = compute_rmse(per_drone[id]);
        }
        std::printf("drone %d: rmse %.4f m (csv recompute %.4f), scans %d, %.0f B/s",
                    id, d.at("rmse_m").get<double>(), csv_rmse, d.at("scans").get<int>(),
                    d.at("bytes_per_s").get<double>());
        std::printf(", proc %.2f ms avg\n", d.at("timing").at("mean_ms").get<double>());
        for (const auto& e : d.at("extrinsics")) {
            if (!e.at("initialized").get<bool>()) {
                std::printf("  extrinsic -> %d: uninitialized\n", e.at("teammate").get<int>());
            } else {
                std::printf("  extrinsic -> %d: %.3f deg, %.3f m\n", e.at("teammate").get<int>(),
                            e.at("rot_err_deg").get<double>(), e.at("trans_err_m").get<double>());
            }
        }
        for (const auto& e : d.at("reacq_events")) {
            std::printf("  reacq t=%.1fs teammate %d: gap %.1fs, innovation %.3f m\n",
                        e.at("t").get<double>(), e.at("teammate").get<int>(),
                        e.at("gap_s").get<double>(), e.at("innovation_m").get<double>());
        }
    }
    return 0;
}

int dump_messages(const std::string& capture_path) {
    std::ifstream in(capture_path);
    if (!in) {
        std::fprintf(stderr, "dump-msgs: cannot open %s\n", capture_path.c_str());
        return 1;
    }
    std::string line;
    std::uint64_t total = 0, bad = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++total;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            std::printf("line %" PRIu64 ": invalid JSON: %s\n", total, e.what());
            ++bad;
            continue;
        }
        const std::string hex = rec.value("bytes_hex", std::string());
        const std::vector<std::uint8_t> bytes = hex_decode(hex);
        std::printf("#%" PRIu64 " t=%.3f->%.3f %d->%d %s\n", total,
                    rec.value("send_time", 0.0), rec.value("arrival_time", 0.0),
                    rec.value("from", -1), rec.value("to", -1), hex.c_str());
        const DecodeResult res = decode(bytes);
        if (const auto* err = std::get_if<DecodeError>(&res)) {
            std::printf("   decode error: %s at byte %zu (%s)\n",
                        decode_error_name(err->kind), err->offset, err->detail.c_str());
            ++bad;
            continue;
        }
        const Message& msg = std::get<Message>(res);
        if (const auto* ego = std::get_if<EgoStateMsg>(&msg)) {
            std::printf("   ego from %u seq %u t=%.3f pos (%.3f %.3f %.3f)\n", ego->sender_id,
                        ego->seq, ego->timestamp, ego->pos.x(), ego->pos.y(), ego->pos.z());
        } else if (const auto* obs = std::get_if<ObservationMsg>(&msg)) {
            std::printf("   obs from %u seq %u t=%.3f observed %u at (%.3f %.3f %.3f)\n",
                        obs->sender_id, obs->seq, obs->timestamp, obs->observed_id,
                        obs->pos_body.x(), obs->pos_body.y(), obs->pos_body.z());
        }
        if (encode(msg) != bytes) {
            std::printf("   round-trip mismatch!\n");
            ++bad;
        }
    }
    std::printf("%" PRIu64 " records, %" PRIu64 " problems\n", total, bad);
    return bad == 0 ? 0 : 1;
}

FuzzStats fuzz_decode(std::uint64_t count, std::uint64_t seed) {
    FuzzStats stats;
    Rng rng(seed);
    std::vector<std::uint8_t> buf;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t len = rng.uniform_index(161);
        buf.resize(len);
        for (auto& b : buf) b = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
        // Bias part of the corpus toward deeper parse paths.
        const std::uint64_t shape = rng.uniform_index(4);
        if (shape >= 1 && len >= 6) {
            buf[0] = 'S';
            buf[1] = 'L';
            buf[2] = 'I';
            buf[3] = 'O';
            if (shape >= 2) buf[4] = 1;
            if (shape >= 3) buf[5] = static_cast<std::uint8_t>(1 + rng.uniform_index(2));
        }
        const DecodeResult res = decode(buf);
        ++stats.total;
        if (std::holds_alternative<Message>(res)) {
            ++stats.decoded;
        } else {
            ++stats.errors;
        }
    }
    return stats;
}

}  // namespace slio
