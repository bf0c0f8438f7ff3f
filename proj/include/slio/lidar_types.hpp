#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace slio {

struct Pose {
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rot * p + pos; }
    Eigen::Vector3d apply_inverse(const Eigen::Vector3d& p) const {
        return rot.transpose() * (p - pos);
    }
    Pose inverse() const { return {rot.transpose(), -(rot.transpose() * pos)}; }
    Pose compose(const Pose& other) const { return {rot * other.rot, rot * other.pos + pos}; }
};

struct ImuSample {
    Eigen::Vector3d gyro = Eigen::Vector3d::Zero();    // rad/s
    Eigen::Vector3d accel = Eigen::Vector3d::Zero();   // m/s^2
    double timestamp = 0.0;                            // s
};

struct LidarPoint {
    Eigen::Vector3d pos_body = Eigen::Vector3d::Zero();  // body frame at sample time
    std::uint8_t reflectivity = 0;                       // 0-255
    double t_offset = 0.0;                               // s within scan
};

struct LidarScan {
    std::vector<LidarPoint> points;
    double scan_end_time = 0.0;  // s
    double duration = 0.1;       // s; t_offset is measured from scan start
    int drone_id = 0;
};

}  // namespace slio
