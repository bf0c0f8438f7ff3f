#pragma once

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "slio/ident.hpp"
#include "slio/lidar_types.hpp"
#include "slio/swarm_state.hpp"
#include "slio/voxel_map.hpp"

namespace slio {

struct EsikfParams {
    // measurement noises
    double point_sigma = 0.05;  // point-to-plane, m
    double obs_sigma = 0.1;     // mutual observation, m per axis
    // plane association
    double plane_rms_tol = 0.05;
    double residual_gate = 0.5;
    int plane_neighbors = 5;
    // map / scan decimation
    double map_leaf = 0.2;
    double scan_leaf = 0.5;
    // iteration control
    int max_iter = 5;
    double eps = 1e-6;
    // process noise (per IMU step; walks are per sqrt(s))
    double gyro_noise = 0.005;
    double accel_noise = 0.05;
    double bias_gyro_walk = 1e-5;
    double bias_acc_walk = 1e-4;
    double ext_rot_walk = 1e-4;
    double ext_pos_walk = 1e-4;
    // undistortion
    double max_imu_gap = 0.05;
    // initial uncertainty
    double init_att_var = 1e-6;
    double init_pos_var = 1e-6;
    double init_vel_var = 1e-4;
    double init_bg_var = 1e-4;
    double init_ba_var = 2.5e-3;
    double init_grav_var = 2.5e-3;
};

/// Scalar point-to-plane residual with the plane it was matched against.
struct PointResidual {
    double value = 0.0;
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d point_body = Eigen::Vector3d::Zero();
    Eigen::Vector3d plane_point = Eigen::Vector3d::Zero();
};

enum class ObsKind { active, passive };

struct ObsResidual {
    ObsKind kind = ObsKind::active;
    int teammate_id = -1;
    Eigen::Vector3d value = Eigen::Vector3d::Zero();
};

/// LiDAR-derived teammate position paired with that teammate's reported
/// self-position (both needed by the active-observation residual).
struct ActiveObservation {
    int teammate_id = -1;
    Eigen::Vector3d observed_body = Eigen::Vector3d::Zero();   // ours, body frame
    Eigen::Vector3d teammate_pos = Eigen::Vector3d::Zero();    // theirs, frame G_j
};

/// A teammate's observation of us, together with the pose it measured from.
struct PassiveObservation {
    int teammate_id = -1;
    Eigen::Matrix3d sender_rot = Eigen::Matrix3d::Identity();  // G_j
    Eigen::Vector3d sender_pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d observed_self_body = Eigen::Vector3d::Zero();  // us, in b_j
};

/// Stacked residuals with dense Jacobian rows over the error state.
struct ResidualBlock {
    Eigen::VectorXd z;
    Eigen::MatrixXd jac;
    Eigen::VectorXd noise_var;
    int point_count = 0;
    int active_count = 0;
    int passive_count = 0;
    int skipped_uninitialized = 0;
    int skipped_unknown = 0;
    std::vector<PointResidual> points;
    std::vector<ObsResidual> observations;

    int rows() const { return static_cast<int>(z.size()); }
};

ResidualBlock combine(ResidualBlock a, ResidualBlock&& b);

/// Point-to-plane residuals against the map: each body point is projected
/// with the current iterate, a plane is least-squares fitted to its nearest
/// map neighbors, and points without a tight plane fit (or beyond the gate)
/// are skipped. Jacobians act on the ego attitude/position blocks only.
ResidualBlock point_plane_residuals(const VoxelMap& map,
                                    std::span<const Eigen::Vector3d> pts_body,
                                    const SwarmState& iterate, const EsikfParams& params);

/// Active and passive mutual-observation residuals. Observations whose
/// teammate extrinsic is uninitialized (or unknown) are skipped and counted.
ResidualBlock mutual_obs_residuals(const SwarmState& iterate,
                                   std::span<const ActiveObservation> active,
                                   std::span<const PassiveObservation> passive,
                                   const EsikfParams& params);

struct UndistortResult {
    std::vector<Eigen::Vector3d> points;  // scan-end body frame
    bool fell_back = false;               // IMU gap: raw points passed through
};

struct UpdateStats {
    int iterations = 0;
    bool converged = false;
    bool regularized = false;
    bool updated = false;
    int point_count = 0;
    int active_count = 0;
    int passive_count = 0;
};

/// Error-state iterated Kalman filter over the swarm manifold: IMU
/// prediction, iterated measurement updates through a caller-supplied
/// residual builder, and the incremental map.
class SwarmFilter {
public:
    SwarmFilter(const std::vector<int>& teammate_ids, const EsikfParams& params);

    /// Mean propagation with zero noise; covariance through the linearized
    /// transition. Non-finite samples are rejected and the previous input
    /// is reused.
    void predict(const ImuSample& imu, double dt);

    /// Each point is moved from its sample-time body frame to the scan-end
    /// body frame using the buffered IMU-propagated poses (piecewise
    /// constant between samples). A buffer gap beyond max_imu_gap falls
    /// back to the raw points, flagged.
    UndistortResult undistort_scan(const LidarScan& scan) const;

    using ResidualBuilder = std::function<ResidualBlock(const SwarmState&)>;

    /// Iterated update: rebuild residuals at each iterate, Gauss-Newton step
    /// on the error state with the prior term, boxplus-apply, stop on small
    /// step or max_iter. Covariance is set at the final iterate.
    UpdateStats iterated_update(const ResidualBuilder& builder);

    /// Voxel-downsample scan-end body points, project with the current
    /// posterior pose and insert into the map. Returns points added.
    int map_update(std::span<const Eigen::Vector3d> pts_body_end);

    /// Seed a teammate extrinsic from trajectory matching. Throws on unknown
    /// id or double initialization.
    void init_extrinsic(int teammate_id, const ExtrinsicEstimate& estimate,
                        const Eigen::Matrix<double, 6, 6>& cov0);

    const SwarmState& state() const { return state_; }
    SwarmState& mutable_state() { return state_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    Eigen::MatrixXd& mutable_covariance() { return cov_; }
    const VoxelMap& map() const { return map_; }
    const EsikfParams& params() const { return params_; }
    double last_imu_time() const { return last_imu_time_; }
    void set_time(double t) { last_imu_time_ = t; }

private:
    struct PoseStamp {
        double t = 0.0;
        Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
        Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    };

    EsikfParams params_;
    SwarmState state_;
    Eigen::MatrixXd cov_;
    VoxelMap map_;
    std::deque<PoseStamp> pose_buffer_;
    ImuSample last_imu_;
    bool has_last_imu_ = false;
    double last_imu_time_ = 0.0;
};

}  // namespace slio
