#include "slio/sensor_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace slio {

namespace {
constexpr double kDegToRad = EIGEN_PI / 180.0;

Eigen::Vector3d direction_from_angles(double az, double el) {
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}
}  // namespace

bool direction_in_fov(const SensorModel& model, const Eigen::Vector3d& dir_body) {
    const double el = std::asin(std::clamp(dir_body.z() / dir_body.norm(), -1.0, 1.0));
    if (model.fov == FovKind::full360) {
        return el >= model.v_min_deg * kDegToRad && el <= model.v_max_deg * kDegToRad;
    }
    const double az = std::atan2(dir_body.y(), dir_body.x());
    return std::abs(az) <= model.h_fov_deg * kDegToRad / 2.0 &&
           std::abs(el) <= model.v_fov_deg * kDegToRad / 2.0;
}

ImuSample synth_imu(const Trajectory& traj, double t, const Eigen::Vector3d& bias_gyro,
                    const Eigen::Vector3d& bias_acc, const Eigen::Vector3d& gravity_world,
                    const SensorModel& model, Rng& rng) {
    ImuSample s;
    s.timestamp = t;
    const Eigen::Matrix3d rot = traj.rotation(t);
    s.gyro = traj.omega_body(t) + bias_gyro +
             Eigen::Vector3d(rng.normal(model.gyro_noise), rng.normal(model.gyro_noise),
                             rng.normal(model.gyro_noise));
    s.accel = rot.transpose() * (traj.acceleration(t) - gravity_world) + bias_acc +
              Eigen::Vector3d(rng.normal(model.accel_noise), rng.normal(model.accel_noise),
                              rng.normal(model.accel_noise));
    return s;
}

LidarScan synth_scan(const WorldModel& world, const std::vector<TrueTrajectory>& trajs,
                     int self_id, double t0, double t1, const SensorModel& model, Rng& rng) {
    const Trajectory* self = nullptr;
    for (const auto& tt : trajs) {
        if (tt.drone_id == self_id) self = tt.traj.get();
    }
    if (!self) throw std::invalid_argument("synth_scan: unknown self_id");

    LidarScan scan;
    scan.drone_id = self_id;
    scan.scan_end_time = t1;
    scan.duration = t1 - t0;
    scan.points.reserve(model.points_per_scan);

    const double period = t1 - t0;
    const double h_half = model.h_fov_deg * kDegToRad / 2.0;
    const double v_half = model.v_fov_deg * kDegToRad / 2.0;

    std::vector<Eigen::Vector3d> marker_centers;
    std::vector<int> marker_ids;

    for (int i = 0; i < model.points_per_scan; ++i) {
        const double t_offset = (i + 0.5) * period / model.points_per_scan;
        const double t = t0 + t_offset;
        const Eigen::Matrix3d rot = self->rotation(t);
        const Eigen::Vector3d pos = self->position(t);

        double az, el;
        if (model.fov == FovKind::full360) {
            az = rng.uniform(-EIGEN_PI, EIGEN_PI);
            el = rng.uniform(model.v_min_deg * kDegToRad, model.v_max_deg * kDegToRad);
        } else {
            az = rng.uniform(-h_half, h_half);
            el = rng.uniform(-v_half, v_half);
        }
        const Eigen::Vector3d dir_body = direction_from_angles(az, el);
        const Eigen::Vector3d dir_world = rot * dir_body;

        marker_centers.clear();
        marker_ids.clear();
        for (const auto& tt : trajs) {
            if (tt.drone_id == self_id) continue;
            marker_centers.push_back(tt.traj->position(t));
            marker_ids.push_back(tt.drone_id);
        }

        const auto hit = world.raycast(pos, dir_world, model.max_range, marker_centers,
                                       marker_ids);
        if (!hit) continue;

        double reflectivity = hit->reflectivity;
        if (model.incidence_attenuation) {
            // Returned intensity falls off with grazing incidence.
            const double cos_inc = std::abs(dir_world.dot(hit->normal));
            reflectivity *= cos_inc;
        }

        const double range = hit->range + rng.normal(model.range_noise_sigma);
        if (range <= 0.0) continue;

        LidarPoint p;
        p.pos_body = dir_body * range;
        p.reflectivity = static_cast<std::uint8_t>(std::clamp(reflectivity, 0.0, 255.0));
        p.t_offset = t_offset;
        scan.points.push_back(p);
    }
    return scan;
}

}  // namespace slio
