#include "slio/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "slio/so3.hpp"

namespace slio {

double compute_rmse(std::span<const std::pair<double, Eigen::Vector3d>> est,
                    const Trajectory& gt, const Pose& origin) {
    if (est.empty()) throw std::invalid_argument("compute_rmse: no estimates");
    double acc = 0.0;
    for (const auto& [t, p] : est) {
        const Eigen::Vector3d gt_local = origin.apply_inverse(gt.position(t));
        acc += (p - gt_local).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(est.size()));
}

double compute_rmse(std::span<const std::pair<Eigen::Vector3d, Eigen::Vector3d>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("compute_rmse: no estimates");
    double acc = 0.0;
    for (const auto& [a, b] : pairs) acc += (a - b).squaredNorm();
    return std::sqrt(acc / static_cast<double>(pairs.size()));
}

std::pair<double, double> compute_extrinsic_error(const Eigen::Matrix3d& est_rot,
                                                  const Eigen::Vector3d& est_pos,
                                                  const Eigen::Matrix3d& gt_rot,
                                                  const Eigen::Vector3d& gt_pos) {
    const double deg = rotation_angle_between(gt_rot, est_rot) * 180.0 / EIGEN_PI;
    return {deg, (gt_pos - est_pos).norm()};
}

}  // namespace slio
