#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "slio/lidar_types.hpp"
#include "slio/rng.hpp"
#include "slio/trajectory.hpp"
#include "slio/world.hpp"

namespace slio {

enum class FovKind { full360, pyramid };

struct SensorModel {
    FovKind fov = FovKind::full360;
    double h_fov_deg = 70.4;   // pyramid: horizontal full angle
    double v_fov_deg = 77.2;   // pyramid: vertical full angle
    double v_min_deg = -7.0;   // full360: elevation bounds
    double v_max_deg = 52.0;
    double max_range = 40.0;
    int points_per_scan = 2000;
    double scan_period = 0.1;
    double range_noise_sigma = 0.02;
    double imu_rate = 200.0;
    double gyro_noise = 0.005;       // rad/s, per sample
    double accel_noise = 0.05;       // m/s^2, per sample
    double bias_gyro_walk = 1e-5;    // rad/s per sqrt(s)
    double bias_acc_walk = 1e-4;     // m/s^2 per sqrt(s)
    bool incidence_attenuation = false;
};

/// Is the unit body-frame direction within the sensor field of view?
bool direction_in_fov(const SensorModel& model, const Eigen::Vector3d& dir_body);

/// One synthetic IMU sample at time t: body angular rate plus gyro bias and
/// noise, specific force R^T (a - g) plus accel bias and noise.
ImuSample synth_imu(const Trajectory& traj, double t, const Eigen::Vector3d& bias_gyro,
                    const Eigen::Vector3d& bias_acc, const Eigen::Vector3d& gravity_world,
                    const SensorModel& model, Rng& rng);

/// One synthetic scan over [t0, t1]: rays drawn pseudo-randomly in the FoV,
/// spread uniformly in time, intersected against the world planes and the
/// teammate marker spheres; nearest hit wins. Points carry the surface
/// reflectivity (optionally attenuated by incidence angle) and are expressed
/// in the body frame at their own sample time.
LidarScan synth_scan(const WorldModel& world, const std::vector<TrueTrajectory>& trajs,
                     int self_id, double t0, double t1, const SensorModel& model, Rng& rng);

}  // namespace slio
