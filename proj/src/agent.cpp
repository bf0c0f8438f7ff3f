#include "slio/agent.hpp"

#include <algorithm>
#include <chrono>

namespace slio {

Agent::Agent(const AgentParams& params)
    : params_(params), filter_(params.teammate_ids, params.esikf) {
    for (int id : params.teammate_ids) links_.try_emplace(id);
}

void Agent::on_imu(const ImuSample& sample) {
    if (!gravity_ready_) {
        warmup_.push_back(sample);
        const double span = warmup_.back().timestamp - warmup_.front().timestamp;
        if (span + 1e-9 >= params_.gravity_init_window) {
            Eigen::Vector3d mean_accel = Eigen::Vector3d::Zero();
            for (const auto& s : warmup_) mean_accel += s.accel;
            mean_accel /= static_cast<double>(warmup_.size());
            // Static start: specific force points opposite gravity.
            filter_.mutable_state().gravity = -mean_accel.normalized() * 9.81;
            filter_.set_time(sample.timestamp);
            gravity_ready_ = true;
            warmup_.clear();
        }
        return;
    }
    const double dt = sample.timestamp - filter_.last_imu_time();
    if (dt <= 0.0) return;
    filter_.predict(sample, dt);
}

void Agent::drain_inbox(double t_now) {
    for (const Delivery& d : inbox_.drain()) {
        const DecodeResult res = decode(d.bytes);
        if (std::holds_alternative<DecodeError>(res)) {
            ++decode_errors_;
            continue;
        }
        const Message& msg = std::get<Message>(res);
        if (const auto* ego = std::get_if<EgoStateMsg>(&msg)) {
            auto it = links_.find(ego->sender_id);
            if (it == links_.end()) continue;
            TeammateLink& link = it->second;
            if (ego->timestamp <= link.last_ego_ts) continue;  // stale-drop
            link.last_ego_ts = ego->timestamp;
            link.recent_egos.push_back(*ego);
            while (!link.recent_egos.empty() &&
                   link.recent_egos.front().timestamp < t_now - 2.0) {
                link.recent_egos.pop_front();
            }
            link.traj.push(ego->timestamp, ego->pos);
        } else if (const auto* obs = std::get_if<ObservationMsg>(&msg)) {
            auto it = links_.find(obs->sender_id);
            if (it == links_.end()) continue;
            if (obs->timestamp < it->second.last_obs_ts) continue;  // stale-drop
            it->second.last_obs_ts = obs->timestamp;
            if (obs->observed_id == params_.drone_id) passive_obs_.push_back(*obs);
        }
    }
    while (!passive_obs_.empty() &&
           passive_obs_.front().timestamp < t_now - params_.max_passive_age) {
        passive_obs_.pop_front();
    }
}

std::optional<EgoStateMsg> Agent::freshest_ego(int id, double t_now, double max_age) const {
    auto it = links_.find(id);
    if (it == links_.end() || it->second.recent_egos.empty()) return std::nullopt;
    const EgoStateMsg& m = it->second.recent_egos.back();
    if (t_now - m.timestamp > max_age) return std::nullopt;
    return m;
}

std::optional<EgoStateMsg> Agent::ego_at(int id, double timestamp, double tol) const {
    auto it = links_.find(id);
    if (it == links_.end()) return std::nullopt;
    for (auto rit = it->second.recent_egos.rbegin(); rit != it->second.recent_egos.rend();
         ++rit) {
        if (std::abs(rit->timestamp - timestamp) <= tol) return *rit;
    }
    return std::nullopt;
}

ScanRecord Agent::on_scan(const LidarScan& scan,
                          std::vector<std::vector<std::uint8_t>>& out) {
    const auto t_start = std::chrono::steady_clock::now();
    ScanRecord rec;
    rec.t = scan.scan_end_time;
    drain_inbox(rec.t);

    if (!gravity_ready_) return rec;
    rec.processed = true;

    const Pose pose{filter_.state().ego_rot, filter_.state().ego_pos};

    // Undistort into the scan-end body frame; results stay parallel to the
    // raw point array so reflectivity carries over by index.
    const UndistortResult und = filter_.undistort_scan(scan);
    rec.undistort_fell_back = und.fell_back;

    // Detection stream: high-reflectivity points, clustered and size-gated.
    std::vector<Eigen::Vector3d> marker_pts;
    std::vector<Eigen::Vector3d> env_pts;  // mapping/registration stream
    std::vector<Eigen::Vector3d> global_pts(und.points.size());
    for (size_t i = 0; i < und.points.size(); ++i) {
        global_pts[i] = pose.apply(und.points[i]);
        if (scan.points[i].reflectivity > params_.reflectivity_threshold) {
            marker_pts.push_back(und.points[i]);
        } else {
            env_pts.push_back(und.points[i]);
        }
    }

    auto clusters = euclidean_cluster(std::span<const Eigen::Vector3d>(marker_pts),
                                      params_.cluster_dist_tol, params_.cluster_min_pts,
                                      params_.cluster_max_pts);
    clusters = reject_invalid(clusters, params_.size_min, params_.size_max);

    // Cluster centroids into the global frame, pushed from the visible
    // surface toward the marker center.
    std::vector<Eigen::Vector3d> centroids_global;
    centroids_global.reserve(clusters.size());
    for (const auto& c : clusters) {
        const double range = c.centroid.norm();
        const Eigen::Vector3d corrected =
            range > 1e-6 ? Eigen::Vector3d(c.centroid * (1.0 + params_.center_offset / range))
                         : c.centroid;
        centroids_global.push_back(pose.apply(corrected));
    }

    // Tracker cadence: predict over the scan interval, then update.
    const double dt =
        last_scan_time_ < 0.0 ? params_.scan_period : rec.t - last_scan_time_;
    const VoxelIndex scan_index(std::span<const Eigen::Vector3d>(global_pts),
                                params_.cluster_dist_tol);
    std::vector<char> claimed(clusters.size(), 0);

    // Teammate trackers first so identified teammates keep their clusters.
    std::stable_sort(trackers_.begin(), trackers_.end(),
                     [](const TrackerState& a, const TrackerState& b) {
                         if ((a.kind == TrackerKind::teammate) !=
                             (b.kind == TrackerKind::teammate)) {
                             return a.kind == TrackerKind::teammate;
                         }
                         return a.tracker_id < b.tracker_id;
                     });

    struct VisualObs {
        int teammate_id;
        Eigen::Vector3d measured_global;
    };
    std::vector<VisualObs> visual_obs;

    std::vector<TrackerState> survivors;
    survivors.reserve(trackers_.size());
    for (auto& tr : trackers_) {
        TeammateFeed feed;
        std::optional<Eigen::Vector3d> feed_vel;
        if (tr.kind == TrackerKind::teammate) {
            if (const auto ego = freshest_ego(tr.teammate_id, rec.t, params_.max_feed_age)) {
                const int slot = filter_.state().extrinsic_slot(tr.teammate_id);
                const ExtrinsicBlock& ext = filter_.state().extrinsics[slot];
                feed_vel = ext.rot * ego->vel;
                feed.vel_global = feed_vel;
                feed.pos_global = ext.rot * ego->pos + ext.pos;
            }
        }
        TrackerState predicted = tracker_predict(tr, dt, feed_vel, params_.tracker);
        TrackerUpdateResult res =
            tracker_update(predicted, clusters, centroids_global, claimed, &scan_index, rec.t,
                           feed, params_.tracker);
        if (res.used_cluster) claimed[*res.used_cluster] = 1;
        if (res.killed) continue;
        if (res.visual_update && res.tracker.kind == TrackerKind::teammate) {
            const double gap = rec.t - tr.last_visual_update_time;
            if (tr.last_visual_update_time >= 0.0 && gap >= params_.reacq_gap) {
                reacq_events_.push_back(
                    {rec.t, res.tracker.teammate_id, gap, res.tracker.last_innovation});
            }
            visual_obs.push_back({res.tracker.teammate_id, res.tracker.pos_global});
        }
        survivors.push_back(std::move(res.tracker));
    }
    trackers_ = std::move(survivors);

    // Any unclaimed valid cluster spawns a fresh temporary tracker.
    for (size_t i = 0; i < clusters.size(); ++i) {
        if (claimed[i]) continue;
        trackers_.push_back(
            TrackerState::spawn(next_tracker_id_++, centroids_global[i], rec.t, params_.tracker));
    }

    // Identification of still-anonymous teammates by trajectory matching.
    if (params_.mutual_obs) {
        std::map<int, TrajWindow> candidates;
        for (const auto& [id, link] : links_) {
            const int slot = filter_.state().extrinsic_slot(id);
            if (slot >= 0 && filter_.state().extrinsics[slot].initialized) continue;
            if (link.traj.size() >= 3) candidates.emplace(id, link.traj);
        }
        if (!candidates.empty()) {
            for (const Assignment& a : identify(trackers_, candidates, params_.ident)) {
                for (auto& tr : trackers_) {
                    if (tr.tracker_id == a.tracker_id) {
                        tr.kind = TrackerKind::teammate;
                        tr.teammate_id = a.teammate_id;
                        break;
                    }
                }
                const double scale = std::clamp(
                    a.extrinsic.residual_rms / params_.ident.residual_thr, 0.1, 1.0);
                Eigen::Matrix<double, 6, 6> cov0 = Eigen::Matrix<double, 6, 6>::Identity();
                const double rot_sd = 5.0 * EIGEN_PI / 180.0;
                cov0.topLeftCorner<3, 3>() *= rot_sd * rot_sd * scale;
                cov0.bottomRightCorner<3, 3>() *= 0.04 * scale;
                filter_.init_extrinsic(a.teammate_id, a.extrinsic, cov0);
                identified_at_[a.teammate_id] = rec.t;
            }
        }
    }

    // Build the measurement set for the iterated update.
    std::vector<ActiveObservation> actives;
    std::vector<PassiveObservation> passives;
    if (params_.mutual_obs) {
        for (const auto& vo : visual_obs) {
            const auto ego = freshest_ego(vo.teammate_id, rec.t, params_.max_passive_age);
            if (!ego) continue;
            ActiveObservation ao;
            ao.teammate_id = vo.teammate_id;
            ao.observed_body = pose.apply_inverse(vo.measured_global);
            // Roll the reported position forward to scan end with the
            // reported velocity.
            ao.teammate_pos = ego->pos + ego->vel * (rec.t - ego->timestamp);
            actives.push_back(ao);
        }
        for (const auto& obs : passive_obs_) {
            if (rec.t - obs.timestamp > params_.max_passive_age) continue;
            const auto ego = ego_at(obs.sender_id, obs.timestamp, 1e-3);
            if (!ego) continue;
            PassiveObservation po;
            po.teammate_id = obs.sender_id;
            po.sender_rot = ego->rot;
            po.sender_pos = ego->pos;
            po.observed_self_body = obs.pos_body;
            passives.push_back(po);
        }
        passive_obs_.clear();
    }

    // Environment points, decimated for residual evaluation; teammates and
    // other tracked movers stay out of the odometry/mapping stream.
    std::vector<Eigen::Vector3d> static_pts;
    static_pts.reserve(env_pts.size());
    for (const auto& pb : env_pts) {
        const Eigen::Vector3d pg = pose.apply(pb);
        bool near_tracker = false;
        for (const auto& tr : trackers_) {
            if ((tr.pos_global - pg).norm() < params_.map_exclude_radius) {
                near_tracker = true;
                break;
            }
        }
        if (!near_tracker) static_pts.push_back(pb);
    }
    const std::vector<Eigen::Vector3d> residual_pts =
        voxel_downsample(static_pts, params_.esikf.scan_leaf);

    if (!map_ready_) {
        filter_.map_update(static_pts);
        map_ready_ = true;
        rec.map_bootstrap = true;
    } else {
        const auto builder = [&](const SwarmState& iterate) {
            ResidualBlock block = point_plane_residuals(
                filter_.map(), residual_pts, iterate, params_.esikf);
            if (params_.mutual_obs) {
                block = combine(std::move(block),
                                mutual_obs_residuals(iterate, actives, passives, params_.esikf));
            }
            return block;
        };
        const UpdateStats stats = filter_.iterated_update(builder);
        rec.point_residuals = stats.point_count;
        rec.active_residuals = stats.active_count;
        rec.passive_residuals = stats.passive_count;
        rec.iterations = stats.iterations;
        rec.converged = stats.converged;
        filter_.map_update(static_pts);
    }

    // Broadcast: ego state always, one observation message per teammate
    // actually seen this scan.
    const SwarmState& post = filter_.state();
    EgoStateMsg ego;
    ego.sender_id = static_cast<std::uint8_t>(params_.drone_id);
    ego.seq = seq_++;
    ego.timestamp = rec.t + params_.clock_offset;
    ego.rot = post.ego_rot;
    ego.pos = post.ego_pos;
    ego.vel = post.ego_vel;
    out.push_back(encode(ego));
    if (params_.mutual_obs) {
        const Pose post_pose{post.ego_rot, post.ego_pos};
        for (const auto& vo : visual_obs) {
            ObservationMsg m;
            m.sender_id = static_cast<std::uint8_t>(params_.drone_id);
            m.seq = seq_++;
            m.timestamp = rec.t + params_.clock_offset;
            m.observed_id = static_cast<std::uint8_t>(vo.teammate_id);
            m.pos_body = post_pose.apply_inverse(vo.measured_global);
            out.push_back(encode(m));
        }
    }

    rec.est = {post.ego_rot, post.ego_pos};
    rec.trackers_alive = static_cast<int>(trackers_.size());
    rec.teammates_identified = static_cast<int>(identified_at_.size());
    last_scan_time_ = rec.t;
    rec.proc_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    return rec;
}

}  // namespace slio
