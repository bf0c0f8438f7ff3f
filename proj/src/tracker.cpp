#include "slio/tracker.hpp"

#include <Eigen/LU>

#include <limits>
#include <stdexcept>

namespace slio {

TrackerState TrackerState::spawn(int tracker_id, const Eigen::Vector3d& pos, double t,
                                 const TrackerParams& params) {
    TrackerState tr;
    tr.tracker_id = tracker_id;
    tr.pos_global = pos;
    tr.vel_global = Eigen::Vector3d::Zero();  // unknown velocity, wide covariance
    tr.cov.setZero();
    tr.cov.topLeftCorner<3, 3>() = params.init_pos_var * Eigen::Matrix3d::Identity();
    tr.cov.bottomRightCorner<3, 3>() = params.init_vel_var * Eigen::Matrix3d::Identity();
    tr.trajectory = TrajWindow(params.window_capacity);
    tr.trajectory.push(t, pos);
    tr.last_visual_update_time = t;
    return tr;
}

TrackerState tracker_predict(const TrackerState& tr, double dt,
                             const std::optional<Eigen::Vector3d>& teammate_vel_global,
                             const TrackerParams& params) {
    if (dt <= 0.0) throw std::invalid_argument("tracker_predict: dt must be > 0");
    TrackerState out = tr;

    Eigen::Vector3d vel = tr.vel_global;
    if (tr.kind == TrackerKind::teammate) {
        if (teammate_vel_global) {
            vel = *teammate_vel_global;
            out.vel_global = vel;
        } else if (tr.steps_since_update > params.max_coast) {
            // No received velocity and the own estimate has gone stale.
            throw std::runtime_error("tracker_predict: teammate tracker has no velocity source");
        }
    }
    out.pos_global = tr.pos_global + vel * dt;

    Eigen::Matrix<double, 6, 6> f = Eigen::Matrix<double, 6, 6>::Identity();
    f.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
    // Discrete white-noise acceleration model.
    const double q = params.accel_sigma * params.accel_sigma;
    Eigen::Matrix<double, 6, 6> qd;
    qd.setZero();
    qd.topLeftCorner<3, 3>() = 0.25 * dt * dt * dt * dt * q * Eigen::Matrix3d::Identity();
    qd.topRightCorner<3, 3>() = 0.5 * dt * dt * dt * q * Eigen::Matrix3d::Identity();
    qd.bottomLeftCorner<3, 3>() = qd.topRightCorner<3, 3>();
    qd.bottomRightCorner<3, 3>() = dt * dt * q * Eigen::Matrix3d::Identity();
    out.cov = f * tr.cov * f.transpose() + qd;
    out.steps_since_update = tr.steps_since_update + 1;
    return out;
}

namespace tracker_detail {

void kalman_position_update(TrackerState& tr, const Eigen::Vector3d& meas, double meas_var) {
    const Eigen::Matrix3d p_pp = tr.cov.topLeftCorner<3, 3>();
    const Eigen::Matrix3d s = p_pp + meas_var * Eigen::Matrix3d::Identity();
    const Eigen::Matrix<double, 6, 3> k = tr.cov.leftCols<3>() * s.inverse();
    const Eigen::Vector3d innovation = meas - tr.pos_global;

    const Eigen::Matrix<double, 6, 1> dx = k * innovation;
    tr.pos_global += dx.head<3>();
    tr.vel_global += dx.tail<3>();
    Eigen::Matrix<double, 6, 6> ikh = Eigen::Matrix<double, 6, 6>::Identity();
    ikh.leftCols<3>() -= k;
    tr.cov = ikh * tr.cov;
    // Keep symmetric against accumulation error.
    tr.cov = 0.5 * (tr.cov + tr.cov.transpose()).eval();
    tr.last_innovation = innovation.norm();
    tr.steps_since_update = 0;
}

}  // namespace tracker_detail

TrackerUpdateResult tracker_update(const TrackerState& tr,
                                   const std::vector<Cluster>& clusters,
                                   const std::vector<Eigen::Vector3d>& cluster_centroids_global,
                                   const std::vector<char>& claimed,
                                   const VoxelIndex* scan_index, double scan_time,
                                   const TeammateFeed& feed, const TrackerParams& params) {
    TrackerUpdateResult res;
    res.tracker = tr;
    TrackerState& out = res.tracker;
    const double meas_var = params.meas_sigma * params.meas_sigma;

    // Nearest unclaimed candidate within the gate; ties by larger point count.
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < clusters.size(); ++i) {
        if (claimed[i]) continue;
        const double d = (cluster_centroids_global[i] - tr.pos_global).norm();
        if (d > params.gate) continue;
        const bool closer = d < best_dist - 1e-12;
        const bool tie_bigger = std::abs(d - best_dist) <= 1e-12 && best >= 0 &&
                                clusters[i].point_count > clusters[best].point_count;
        if (closer || tie_bigger) {
            best = static_cast<int>(i);
            best_dist = d;
        }
    }

    if (best >= 0) {
        tracker_detail::kalman_position_update(out, cluster_centroids_global[best], meas_var);
        out.trajectory.push(scan_time, out.pos_global);
        out.last_visual_update_time = scan_time;
        res.used_cluster = best;
        res.visual_update = true;
        return res;
    }

    // Re-cluster raw points inside the predicted region.
    if (scan_index) {
        std::vector<int> region =
            scan_index->radius_query(tr.pos_global, params.region_radius, &res.points_touched);
        if (!region.empty()) {
            std::vector<Eigen::Vector3d> pts;
            pts.reserve(region.size());
            for (int idx : region) pts.push_back(scan_index->point(idx));
            auto sub = euclidean_cluster(std::span<const Eigen::Vector3d>(pts),
                                         params.cluster_dist_tol, params.cluster_min_pts,
                                         params.cluster_max_pts);
            sub = reject_invalid(sub, params.size_min, params.size_max);
            int pick = -1;
            double pick_dist = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < sub.size(); ++i) {
                const double d = (sub[i].centroid - tr.pos_global).norm();
                if (d < pick_dist) {
                    pick = static_cast<int>(i);
                    pick_dist = d;
                }
            }
            if (pick >= 0 && pick_dist <= params.region_radius) {
                tracker_detail::kalman_position_update(out, sub[pick].centroid, meas_var);
                out.trajectory.push(scan_time, out.pos_global);
                out.last_visual_update_time = scan_time;
                res.visual_update = true;
                return res;
            }
        }
    }

    // Teammate trackers keep updating from the received odometry.
    if (tr.kind == TrackerKind::teammate && feed.pos_global) {
        tracker_detail::kalman_position_update(out, *feed.pos_global, meas_var);
        out.trajectory.push(scan_time, out.pos_global);
        return res;
    }

    if (out.steps_since_update > params.max_coast) res.killed = true;
    return res;
}

}  // namespace slio
