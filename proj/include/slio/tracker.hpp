#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "slio/clustering.hpp"
#include "slio/lidar_types.hpp"
#include "slio/traj_window.hpp"

namespace slio {

enum class TrackerKind { temporary, teammate };

struct TrackerParams {
    double meas_sigma = 0.05;      // position measurement noise per axis, m
    double accel_sigma = 1.0;      // process acceleration noise, m/s^2
    double gate = 0.5;             // association gate radius, m
    double region_radius = 0.8;    // predicted-region re-cluster radius, m
    int max_coast = 10;            // kill after this many scans without update
    double init_pos_var = 0.25;    // spawn position variance, m^2
    double init_vel_var = 4.0;     // spawn velocity variance, (m/s)^2
    size_t window_capacity = 100;  // trajectory window length
    // re-cluster parameters (match the detection stage)
    double cluster_dist_tol = 0.3;
    int cluster_min_pts = 3;
    int cluster_max_pts = 500;
    Eigen::Vector3d size_min = Eigen::Vector3d::Constant(0.05);
    Eigen::Vector3d size_max = Eigen::Vector3d::Constant(0.8);
};

/// Constant-velocity Kalman tracker over an observed object's global
/// position and velocity. Temporary trackers follow unidentified
/// high-reflectivity objects; teammate trackers are promoted after
/// identification and predict with the teammate's reported velocity.
struct TrackerState {
    TrackerKind kind = TrackerKind::temporary;
    int teammate_id = -1;  // valid for teammate kind
    int tracker_id = 0;
    Eigen::Vector3d pos_global = Eigen::Vector3d::Zero();
    Eigen::Vector3d vel_global = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Identity();
    int steps_since_update = 0;
    double last_visual_update_time = -1.0;  // last cluster-backed update
    double last_innovation = 0.0;           // |predicted - measured| at last update
    TrajWindow trajectory{100};

    static TrackerState spawn(int tracker_id, const Eigen::Vector3d& pos, double t,
                              const TrackerParams& params);
};

/// Extra context a teammate tracker can fall back to when no cluster is
/// found: the teammate's reported velocity (for prediction) and position,
/// both already projected into our global frame through the extrinsic.
struct TeammateFeed {
    std::optional<Eigen::Vector3d> vel_global;
    std::optional<Eigen::Vector3d> pos_global;
};

/// Constant-velocity prediction over dt. Teammate trackers use the reported
/// velocity when available and fall back to their own velocity estimate.
/// Throws if a teammate tracker has neither.
TrackerState tracker_predict(const TrackerState& tr, double dt,
                             const std::optional<Eigen::Vector3d>& teammate_vel_global,
                             const TrackerParams& params);

struct TrackerUpdateResult {
    TrackerState tracker;
    bool killed = false;
    std::optional<int> used_cluster;  // index into the candidate cluster list
    bool visual_update = false;       // updated from a cluster or re-cluster
    int points_touched = 0;           // raw points examined while re-clustering
};

/// Measurement step per scan: associate the nearest candidate cluster within
/// the gate; otherwise re-cluster raw points inside the predicted region;
/// otherwise coast (teammate kind falls back to reported odometry). Kills the
/// tracker after max_coast scans without any update.
///
/// `cluster_centroids_global` are candidate centroids already in the global
/// frame (same order as `clusters`); `claimed` marks candidates already
/// consumed by other trackers this scan. `scan_index` indexes the raw scan
/// points in the global frame for predicted-region re-clustering.
TrackerUpdateResult tracker_update(const TrackerState& tr,
                                   const std::vector<Cluster>& clusters,
                                   const std::vector<Eigen::Vector3d>& cluster_centroids_global,
                                   const std::vector<char>& claimed,
                                   const VoxelIndex* scan_index, double scan_time,
                                   const TeammateFeed& feed, const TrackerParams& params);

namespace tracker_detail {
/// Position-measurement Kalman update (shared by cluster, re-cluster and
/// odometry-fallback paths).
void kalman_position_update(TrackerState& tr, const Eigen::Vector3d& meas, double meas_var);
}  // namespace tracker_detail

}  // namespace slio
