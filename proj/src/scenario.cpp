#include "slio/scenario.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

namespace slio {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("scenario config: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) fail(path + "." + key, "unknown key");
    }
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double num_or(const json& j, const std::string& key, const std::string& path, double dflt) {
    return j.contains(key) ? num(j.at(key), path + "." + key) : dflt;
}

int int_or(const json& j, const std::string& key, const std::string& path, int dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number_integer()) fail(path + "." + key, "expected an integer");
    return j.at(key).get<int>();
}

bool bool_or(const json& j, const std::string& key, const std::string& path, bool dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_boolean()) fail(path + "." + key, "expected a boolean");
    return j.at(key).get<bool>();
}

Eigen::Vector3d vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail(path, "expected [x, y, z]");
    return {num(j[0], path), num(j[1], path), num(j[2], path)};
}

Eigen::Vector3d vec3_or(const json& j, const std::string& key, const std::string& path,
                        const Eigen::Vector3d& dflt) {
    return j.contains(key) ? vec3(j.at(key), path + "." + key) : dflt;
}

Eigen::Vector2d vec2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) fail(path, "expected [u, v]");
    return {num(j[0], path), num(j[1], path)};
}

std::uint8_t refl_or(const json& j, const std::string& key, const std::string& path, int dflt) {
    const int v = int_or(j, key, path, dflt);
    if (v < 0 || v > 255) fail(path + "." + key, "reflectivity must be 0..255");
    return static_cast<std::uint8_t>(v);
}

// ---------------------------------------------------------------------------
// World

void build_room(WorldModel& world, const json& j, const std::string& path) {
    const Eigen::Vector3d size = vec3_or(j, "size", path, {12.0, 10.0, 4.0});
    const Eigen::Vector3d c = vec3_or(j, "center", path, {0.0, 0.0, 0.0});
    const std::uint8_t refl = refl_or(j, "reflectivity", path, 30);
    const double hx = size.x() / 2.0, hy = size.y() / 2.0, hz = size.z();
    world.planes.push_back(PlanePatch::make({c.x(), c.y(), 0.0}, Eigen::Vector3d::UnitZ(),
                                            {size.x(), size.y()}, refl));
    world.planes.push_back(PlanePatch::make({c.x(), c.y(), hz}, -Eigen::Vector3d::UnitZ(),
                                            {size.x(), size.y()}, refl));
    world.planes.push_back(PlanePatch::make({c.x() + hx, c.y(), hz / 2.0},
                                            -Eigen::Vector3d::UnitX(), {size.y(), size.z()},
                                            refl));
    world.planes.push_back(PlanePatch::make({c.x() - hx, c.y(), hz / 2.0},
                                            Eigen::Vector3d::UnitX(), {size.y(), size.z()},
                                            refl));
    world.planes.push_back(PlanePatch::make({c.x(), c.y() + hy, hz / 2.0},
                                            -Eigen::Vector3d::UnitY(), {size.x(), size.z()},
                                            refl));
    world.planes.push_back(PlanePatch::make({c.x(), c.y() - hy, hz / 2.0},
                                            Eigen::Vector3d::UnitY(), {size.x(), size.z()},
                                            refl));
}

void build_wall(WorldModel& world, const json& j, const std::string& path) {
    world.planes.push_back(PlanePatch::make(
        vec3_or(j, "point", path, {6.0, 0.0, 2.0}),
        vec3_or(j, "normal", path, {-1.0, 0.0, 0.0}),
        j.contains("extent") ? vec2(j.at("extent"), path + ".extent") : Eigen::Vector2d(30.0, 12.0),
        refl_or(j, "reflectivity", path, 30)));
}

void build_corridor(WorldModel& world, const json& j, const std::string& path) {
    const Eigen::Vector3d origin = vec3_or(j, "origin", path, {0.0, 0.0, 0.0});
    const double length = num_or(j, "length", path, 20.0);
    const double width = num_or(j, "width", path, 3.0);
    const double height = num_or(j, "height", path, 3.0);
    const std::uint8_t refl = refl_or(j, "reflectivity", path, 30);
    const double xm = origin.x() + length / 2.0;
    world.planes.push_back(PlanePatch::make({xm, origin.y() - width / 2.0, height / 2.0},
                                            Eigen::Vector3d::UnitY(), {length, height}, refl));
    world.planes.push_back(PlanePatch::make({xm, origin.y() + width / 2.0, height / 2.0},
                                            -Eigen::Vector3d::UnitY(), {length, height}, refl));
    world.planes.push_back(PlanePatch::make({xm, origin.y(), 0.0}, Eigen::Vector3d::UnitZ(),
                                            {length, width}, refl));
    world.planes.push_back(PlanePatch::make({xm, origin.y(), height}, -Eigen::Vector3d::UnitZ(),
                                            {length, width}, refl));
}

WorldModel parse_world(const json& j, const std::string& path) {
    check_keys(j, path,
               {"preset", "size", "center", "point", "normal", "extent", "origin", "length",
                "width", "height", "reflectivity", "boxes", "extra_planes", "marker_radius",
                "marker_reflectivity"});
    WorldModel world;
    world.drone_marker_radius = num_or(j, "marker_radius", path, 0.25);
    world.marker_reflectivity = refl_or(j, "marker_reflectivity", path, 255);

    const std::string preset = j.contains("preset") ? j.at("preset").get<std::string>() : "room";
    if (preset == "room") {
        build_room(world, j, path);
    } else if (preset == "wall") {
        build_wall(world, j, path);
    } else if (preset == "corridor") {
        build_corridor(world, j, path);
    } else if (preset != "empty") {
        fail(path + ".preset", "unknown preset '" + preset + "'");
    }

    if (j.contains("boxes")) {
        const json& boxes = j.at("boxes");
        if (!boxes.is_array()) fail(path + ".boxes", "expected an array");
        for (size_t i = 0; i < boxes.size(); ++i) {
            const std::string bp = path + ".boxes[" + std::to_string(i) + "]";
            check_keys(boxes[i], bp, {"center", "size", "reflectivity"});
            world.add_box(vec3(boxes[i].at("center"), bp + ".center"),
                          vec3(boxes[i].at("size"), bp + ".size"),
                          refl_or(boxes[i], "reflectivity", bp, 30));
        }
    }
    if (j.contains("extra_planes")) {
        const json& planes = j.at("extra_planes");
        if (!planes.is_array()) fail(path + ".extra_planes", "expected an array");
        for (size_t i = 0; i < planes.size(); ++i) {
            const std::string pp = path + ".extra_planes[" + std::to_string(i) + "]";
            check_keys(planes[i], pp, {"point", "normal", "extent", "reflectivity"});
            world.planes.push_back(PlanePatch::make(
                vec3(planes[i].at("point"), pp + ".point"),
                vec3(planes[i].at("normal"), pp + ".normal"),
                vec2(planes[i].at("extent"), pp + ".extent"),
                refl_or(planes[i], "reflectivity", pp, 30)));
        }
    }

    for (const auto& plane : world.planes) {
        if (world.marker_reflectivity <= plane.reflectivity) {
            fail(path, "marker_reflectivity must exceed every plane reflectivity");
        }
    }
    return world;
}

// ---------------------------------------------------------------------------
// Trajectories

constexpr double kDegToRad = EIGEN_PI / 180.0;

std::shared_ptr<const Trajectory> parse_trajectory(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("type")) fail(path, "expected an object with 'type'");
    const std::string type = j.at("type").get<std::string>();
    std::shared_ptr<const Trajectory> traj;

    if (type == "hover") {
        check_keys(j, path, {"type", "pos", "yaw_deg"});
        traj = std::make_shared<HoverTrajectory>(vec3(j.at("pos"), path + ".pos"),
                                                 num_or(j, "yaw_deg", path, 0.0) * kDegToRad);
    } else if (type == "circle") {
        check_keys(j, path,
                   {"type", "center", "radius", "omega", "phase_deg", "z_amplitude", "z_omega",
                    "yaw_mode", "yaw_deg", "ramp"});
        CircleTrajectory::Config c;
        c.center = vec3(j.at("center"), path + ".center");
        c.radius = num_or(j, "radius", path, 1.0);
        c.omega = num_or(j, "omega", path, 1.0);
        c.phase = num_or(j, "phase_deg", path, 0.0) * kDegToRad;
        c.z_amplitude = num_or(j, "z_amplitude", path, 0.0);
        c.z_omega = num_or(j, "z_omega", path, 0.0);
        c.yaw_fixed = num_or(j, "yaw_deg", path, 0.0) * kDegToRad;
        if (j.contains("yaw_mode")) {
            const std::string mode = j.at("yaw_mode").get<std::string>();
            if (mode == "tangent") {
                c.yaw_tangent = true;
            } else if (mode != "fixed") {
                fail(path + ".yaw_mode", "expected 'fixed' or 'tangent'");
            }
        }
        traj = std::make_shared<CircleTrajectory>(c);
    } else if (type == "lissajous") {
        check_keys(j, path,
                   {"type", "center", "amplitude", "omega", "phase_deg", "yaw_deg",
                    "yaw_spin_rate", "ramp"});
        LissajousTrajectory::Config c;
        c.center = vec3(j.at("center"), path + ".center");
        c.amplitude = vec3_or(j, "amplitude", path, {1.0, 1.0, 0.3});
        c.omega = vec3_or(j, "omega", path, {0.7, 1.1, 0.9});
        c.phase = vec3_or(j, "phase_deg", path, {0.0, 0.0, 0.0}) * kDegToRad;
        c.yaw_fixed = num_or(j, "yaw_deg", path, 0.0) * kDegToRad;
        c.yaw_spin_rate = num_or(j, "yaw_spin_rate", path, 0.0);
        traj = std::make_shared<LissajousTrajectory>(c);
    } else if (type == "waypoints") {
        check_keys(j, path, {"type", "knots"});
        if (!j.contains("knots") || !j.at("knots").is_array()) {
            fail(path + ".knots", "expected an array of knots");
        }
        std::vector<WaypointTrajectory::Knot> knots;
        const json& arr = j.at("knots");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string kp = path + ".knots[" + std::to_string(i) + "]";
            check_keys(arr[i], kp, {"t", "pos", "yaw_deg"});
            WaypointTrajectory::Knot k;
            k.t = num(arr[i].at("t"), kp + ".t");
            k.pos = vec3(arr[i].at("pos"), kp + ".pos");
            k.yaw = num_or(arr[i], "yaw_deg", kp, 0.0) * kDegToRad;
            knots.push_back(k);
        }
        traj = std::make_shared<WaypointTrajectory>(std::move(knots));
    } else {
        fail(path + ".type", "unknown trajectory type '" + type + "'");
    }

    const double ramp = num_or(j, "ramp", path, 0.0);
    if (ramp > 0.0) traj = std::make_shared<RampedTrajectory>(traj, ramp);
    return traj;
}

SensorModel parse_sensor(const json& j, const std::string& path) {
    check_keys(j, path,
               {"fov", "h_fov_deg", "v_fov_deg", "v_min_deg", "v_max_deg", "max_range",
                "points_per_scan", "scan_period", "range_noise_sigma", "imu_rate", "gyro_noise",
                "accel_noise", "bias_gyro_walk", "bias_acc_walk", "incidence_attenuation"});
    SensorModel m;
    if (j.contains("fov")) {
        const std::string fov = j.at("fov").get<std::string>();
        if (fov == "full360") {
            m.fov = FovKind::full360;
        } else if (fov == "pyramid") {
            m.fov = FovKind::pyramid;
        } else {
            fail(path + ".fov", "expected 'full360' or 'pyramid'");
        }
    }
    m.h_fov_deg = num_or(j, "h_fov_deg", path, m.h_fov_deg);
    m.v_fov_deg = num_or(j, "v_fov_deg", path, m.v_fov_deg);
    m.v_min_deg = num_or(j, "v_min_deg", path, m.v_min_deg);
    m.v_max_deg = num_or(j, "v_max_deg", path, m.v_max_deg);
    m.max_range = num_or(j, "max_range", path, m.max_range);
    m.points_per_scan = int_or(j, "points_per_scan", path, m.points_per_scan);
    m.scan_period = num_or(j, "scan_period", path, m.scan_period);
    m.range_noise_sigma = num_or(j, "range_noise_sigma", path, m.range_noise_sigma);
    m.imu_rate = num_or(j, "imu_rate", path, m.imu_rate);
    m.gyro_noise = num_or(j, "gyro_noise", path, m.gyro_noise);
    m.accel_noise = num_or(j, "accel_noise", path, m.accel_noise);
    m.bias_gyro_walk = num_or(j, "bias_gyro_walk", path, m.bias_gyro_walk);
    m.bias_acc_walk = num_or(j, "bias_acc_walk", path, m.bias_acc_walk);
    m.incidence_attenuation = bool_or(j, "incidence_attenuation", path, false);
    if (m.scan_period <= 0.0) fail(path + ".scan_period", "must be positive");
    if (m.imu_rate < 10.0 / m.scan_period) {
        fail(path + ".imu_rate", "must be at least 10x the scan rate");
    }
    return m;
}

DroneConfig parse_drone(const json& j, const std::string& path) {
    check_keys(j, path,
               {"id", "clock_offset", "mutual_obs", "sensor", "trajectory",
                "init_bias_gyro_sigma", "init_bias_acc_sigma"});
    DroneConfig d;
    if (!j.contains("id")) fail(path, "missing drone id");
    d.id = int_or(j, "id", path, 0);
    if (d.id < 0 || d.id > 255) fail(path + ".id", "drone id must fit u8");
    d.clock_offset = num_or(j, "clock_offset", path, 0.0);
    if (j.contains("mutual_obs")) d.mutual_obs = bool_or(j, "mutual_obs", path, true);
    if (j.contains("sensor")) d.sensor = parse_sensor(j.at("sensor"), path + ".sensor");
    if (!j.contains("trajectory")) fail(path, "missing trajectory");
    d.trajectory = parse_trajectory(j.at("trajectory"), path + ".trajectory");
    d.init_bias_gyro_sigma = num_or(j, "init_bias_gyro_sigma", path, d.init_bias_gyro_sigma);
    d.init_bias_acc_sigma = num_or(j, "init_bias_acc_sigma", path, d.init_bias_acc_sigma);
    return d;
}

void parse_params(const json& j, const std::string& path, AgentParams& p) {
    check_keys(j, path, {"detect", "ident", "esikf", "agent"});
    if (j.contains("detect")) {
        const json& d = j.at("detect");
        const std::string dp = path + ".detect";
        check_keys(d, dp,
                   {"reflectivity_threshold", "dist_tol", "min_pts", "max_pts", "size_min",
                    "size_max", "gate", "region_radius", "max_coast", "meas_sigma",
                    "accel_sigma", "center_offset", "map_exclude_radius"});
        p.reflectivity_threshold =
            static_cast<std::uint8_t>(int_or(d, "reflectivity_threshold", dp, 200));
        p.cluster_dist_tol = num_or(d, "dist_tol", dp, p.cluster_dist_tol);
        p.cluster_min_pts = int_or(d, "min_pts", dp, p.cluster_min_pts);
        p.cluster_max_pts = int_or(d, "max_pts", dp, p.cluster_max_pts);
        p.size_min = vec3_or(d, "size_min", dp, p.size_min);
        p.size_max = vec3_or(d, "size_max", dp, p.size_max);
        p.tracker.gate = num_or(d, "gate", dp, p.tracker.gate);
        p.tracker.region_radius = num_or(d, "region_radius", dp, p.tracker.region_radius);
        p.tracker.max_coast = int_or(d, "max_coast", dp, p.tracker.max_coast);
        p.tracker.meas_sigma = num_or(d, "meas_sigma", dp, p.tracker.meas_sigma);
        p.tracker.accel_sigma = num_or(d, "accel_sigma", dp, p.tracker.accel_sigma);
        p.center_offset = num_or(d, "center_offset", dp, p.center_offset);
        p.map_exclude_radius = num_or(d, "map_exclude_radius", dp, p.map_exclude_radius);
        p.tracker.cluster_dist_tol = p.cluster_dist_tol;
        p.tracker.cluster_min_pts = p.cluster_min_pts;
        p.tracker.cluster_max_pts = p.cluster_max_pts;
        p.tracker.size_min = p.size_min;
        p.tracker.size_max = p.size_max;
    }
    if (j.contains("ident")) {
        const json& d = j.at("ident");
        const std::string dp = path + ".ident";
        check_keys(d, dp, {"window", "assoc_tol", "residual_thr", "sigma2_min"});
        p.ident.window_capacity = static_cast<size_t>(int_or(d, "window", dp, 100));
        p.ident.assoc_tol = num_or(d, "assoc_tol", dp, p.ident.assoc_tol);
        p.ident.residual_thr = num_or(d, "residual_thr", dp, p.ident.residual_thr);
        p.ident.sigma2_min = num_or(d, "sigma2_min", dp, p.ident.sigma2_min);
        p.tracker.window_capacity = p.ident.window_capacity;
    }
    if (j.contains("esikf")) {
        const json& d = j.at("esikf");
        const std::string dp = path + ".esikf";
        check_keys(d, dp,
                   {"point_sigma", "obs_sigma", "plane_rms_tol", "residual_gate",
                    "plane_neighbors", "map_leaf", "scan_leaf", "max_iter", "eps",
                    "ext_rot_walk", "ext_pos_walk", "max_imu_gap"});
        p.esikf.point_sigma = num_or(d, "point_sigma", dp, p.esikf.point_sigma);
        p.esikf.obs_sigma = num_or(d, "obs_sigma", dp, p.esikf.obs_sigma);
        p.esikf.plane_rms_tol = num_or(d, "plane_rms_tol", dp, p.esikf.plane_rms_tol);
        p.esikf.residual_gate = num_or(d, "residual_gate", dp, p.esikf.residual_gate);
        p.esikf.plane_neighbors = int_or(d, "plane_neighbors", dp, p.esikf.plane_neighbors);
        p.esikf.map_leaf = num_or(d, "map_leaf", dp, p.esikf.map_leaf);
        p.esikf.scan_leaf = num_or(d, "scan_leaf", dp, p.esikf.scan_leaf);
        p.esikf.max_iter = int_or(d, "max_iter", dp, p.esikf.max_iter);
        p.esikf.eps = num_or(d, "eps", dp, p.esikf.eps);
        p.esikf.ext_rot_walk = num_or(d, "ext_rot_walk", dp, p.esikf.ext_rot_walk);
        p.esikf.ext_pos_walk = num_or(d, "ext_pos_walk", dp, p.esikf.ext_pos_walk);
        p.esikf.max_imu_gap = num_or(d, "max_imu_gap", dp, p.esikf.max_imu_gap);
    }
    if (j.contains("agent")) {
        const json& d = j.at("agent");
        const std::string dp = path + ".agent";
        check_keys(d, dp, {"gravity_init_window", "max_feed_age", "max_passive_age", "reacq_gap"});
        p.gravity_init_window = num_or(d, "gravity_init_window", dp, p.gravity_init_window);
        p.max_feed_age = num_or(d, "max_feed_age", dp, p.max_feed_age);
        p.max_passive_age = num_or(d, "max_passive_age", dp, p.max_passive_age);
        p.reacq_gap = num_or(d, "reacq_gap", dp, p.reacq_gap);
    }
}

}  // namespace

ScenarioConfig parse_scenario(const json& root) {
    check_keys(root, "$",
               {"seed", "duration", "mode", "capture_messages", "world", "channel", "drones",
                "params"});
    ScenarioConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(num_or(root, "seed", "$", 1.0));
    cfg.duration = num_or(root, "duration", "$", 30.0);
    if (cfg.duration <= 0.0) fail("$.duration", "must be positive");
    if (root.contains("mode")) {
        cfg.mode = root.at("mode").get<std::string>();
        if (cfg.mode != "swarm" && cfg.mode != "solo") {
            fail("$.mode", "expected 'swarm' or 'solo'");
        }
    }
    cfg.capture_messages = bool_or(root, "capture_messages", "$", false);

    if (root.contains("channel")) {
        const json& c = root.at("channel");
        check_keys(c, "$.channel", {"drop_prob", "delay_mean", "delay_jitter"});
        cfg.channel.drop_prob = num_or(c, "drop_prob", "$.channel", 0.0);
        cfg.channel.delay_mean = num_or(c, "delay_mean", "$.channel", 0.0);
        cfg.channel.delay_jitter = num_or(c, "delay_jitter", "$.channel", 0.0);
        if (cfg.channel.drop_prob < 0.0 || cfg.channel.drop_prob > 1.0) {
            fail("$.channel.drop_prob", "must be within [0, 1]");
        }
        if (cfg.channel.delay_mean < 0.0) fail("$.channel.delay_mean", "must be >= 0");
    }
    cfg.channel.seed = cfg.seed;

    cfg.world = root.contains("world") ? parse_world(root.at("world"), "$.world") : WorldModel{};
    if (!root.contains("world")) build_room(cfg.world, json::object(), "$.world");

    if (!root.contains("drones") || !root.at("drones").is_array() ||
        root.at("drones").empty()) {
        fail("$.drones", "expected a non-empty array");
    }
    const json& drones = root.at("drones");
    for (size_t i = 0; i < drones.size(); ++i) {
        cfg.drones.push_back(parse_drone(drones[i], "$.drones[" + std::to_string(i) + "]"));
    }
    std::set<int> ids;
    for (const auto& d : cfg.drones) {
        if (!ids.insert(d.id).second) fail("$.drones", "duplicate drone id");
    }

    if (root.contains("params")) parse_params(root.at("params"), "$.params", cfg.agent_defaults);

    // The sensor scan period drives the agent cadence; require a shared one.
    const double period = cfg.drones.front().sensor.scan_period;
    for (const auto& d : cfg.drones) {
        if (std::abs(d.sensor.scan_period - period) > 1e-12) {
            fail("$.drones", "all drones must share one scan_period");
        }
    }
    cfg.agent_defaults.scan_period = period;
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario config: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("scenario config: " + path + ": " + e.what());
    }
    return parse_scenario(root);
}

std::vector<TrueTrajectory> true_trajectories(const ScenarioConfig& config) {
    std::vector<TrueTrajectory> out;
    out.reserve(config.drones.size());
    for (const auto& d : config.drones) out.push_back({d.id, d.trajectory});
    return out;
}

bool drone_mutual_obs(const ScenarioConfig& config, const DroneConfig& drone) {
    if (drone.mutual_obs) return *drone.mutual_obs;
    return config.mode == "swarm";
}

}  // namespace slio
