#pragma once

#include <Eigen/Core>
#include <span>
#include <utility>

#include "slio/lidar_types.hpp"
#include "slio/trajectory.hpp"

namespace slio {

/// RMSE of timestamped position estimates against the ground-truth
/// trajectory, both expressed in the drone's own global frame (the body
/// frame at t = 0, given by `origin`). No alignment transform is applied.
double compute_rmse(std::span<const std::pair<double, Eigen::Vector3d>> est,
                    const Trajectory& gt, const Pose& origin);

/// RMSE over pre-aligned position pairs (est, gt).
double compute_rmse(std::span<const std::pair<Eigen::Vector3d, Eigen::Vector3d>> pairs);

/// Rotation geodesic angle in degrees and translation distance in meters
/// between an estimated and a ground-truth rigid transform.
std::pair<double, double> compute_extrinsic_error(const Eigen::Matrix3d& est_rot,
                                                  const Eigen::Vector3d& est_pos,
                                                  const Eigen::Matrix3d& gt_rot,
                                                  const Eigen::Vector3d& gt_pos);

}  // namespace slio
