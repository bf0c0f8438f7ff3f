#include "slio/esikf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "slio/so3.hpp"

namespace slio {

ResidualBlock combine(ResidualBlock a, ResidualBlock&& b) {
    if (b.rows() == 0) {
        a.skipped_uninitialized += b.skipped_uninitialized;
        a.skipped_unknown += b.skipped_unknown;
        return a;
    }
    if (a.rows() == 0) {
        b.skipped_uninitialized += a.skipped_uninitialized;
        b.skipped_unknown += a.skipped_unknown;
        return std::move(b);
    }
    const int n = a.rows(), m = b.rows();
    a.z.conservativeResize(n + m);
    a.z.tail(m) = b.z;
    a.jac.conservativeResize(n + m, Eigen::NoChange);
    a.jac.bottomRows(m) = b.jac;
    a.noise_var.conservativeResize(n + m);
    a.noise_var.tail(m) = b.noise_var;
    a.point_count += b.point_count;
    a.active_count += b.active_count;
    a.passive_count += b.passive_count;
    a.skipped_uninitialized += b.skipped_uninitialized;
    a.skipped_unknown += b.skipped_unknown;
    a.points.insert(a.points.end(), b.points.begin(), b.points.end());
    a.observations.insert(a.observations.end(), b.observations.begin(), b.observations.end());
    return a;
}

ResidualBlock point_plane_residuals(const VoxelMap& map,
                                    std::span<const Eigen::Vector3d> pts_body,
                                    const SwarmState& iterate, const EsikfParams& params) {
    ResidualBlock block;
    const int dim = iterate.error_dim();
    if (map.size() < static_cast<size_t>(params.plane_neighbors)) {
        block.jac.resize(0, dim);
        return block;
    }

    std::vector<double> zs;
    std::vector<Eigen::Matrix<double, 1, Eigen::Dynamic>> rows;
    std::vector<int> nn_idx;
    std::vector<double> nn_dist;

    const Eigen::Matrix3d& rot = iterate.ego_rot;
    const Eigen::Vector3d& pos = iterate.ego_pos;

    for (const auto& pb : pts_body) {
        const Eigen::Vector3d pg = rot * pb + pos;
        map.knn(pg, params.plane_neighbors, nn_idx, nn_dist);
        if (static_cast<int>(nn_idx.size()) < params.plane_neighbors) continue;

        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (int idx : nn_idx) centroid += map.point(idx);
        centroid /= static_cast<double>(nn_idx.size());
        Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
        for (int idx : nn_idx) {
            const Eigen::Vector3d d = map.point(idx) - centroid;
            scatter += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
        Eigen::Vector3d normal = eig.eigenvectors().col(0);
        // Canonical sign: plane normal faces the sensor.
        if (normal.dot(pos - centroid) < 0.0) normal = -normal;
        const double fit_rms = std::sqrt(eig.eigenvalues()(0) / nn_idx.size());
        if (fit_rms > params.plane_rms_tol) continue;

        const double dist = normal.dot(pg - centroid);
        if (std::abs(dist) > params.residual_gate) continue;

        Eigen::Matrix<double, 1, Eigen::Dynamic> row(1, dim);
        row.setZero();
        row.segment<3>(0) = -normal.transpose() * rot * skew<double>(pb);
        row.segment<3>(3) = normal.transpose();
        rows.push_back(row);
        zs.push_back(dist);
        block.points.push_back({dist, normal, pb, centroid});
    }

    const int n = static_cast<int>(zs.size());
    block.z.resize(n);
    block.jac.resize(n, dim);
    block.noise_var = Eigen::VectorXd::Constant(n, params.point_sigma * params.point_sigma);
    for (int i = 0; i < n; ++i) {
        block.z(i) = zs[i];
        block.jac.row(i) = rows[i];
    }
    block.point_count = n;
    return block;
}

ResidualBlock mutual_obs_residuals(const SwarmState& iterate,
                                   std::span<const ActiveObservation> active,
                                   std::span<const PassiveObservation> passive,
                                   const EsikfParams& params) {
    ResidualBlock block;
    const int dim = iterate.error_dim();
    std::vector<Eigen::Vector3d> zs;
    std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> jacs;

    const Eigen::Matrix3d ri_t = iterate.ego_rot.transpose();
    const double var = params.obs_sigma * params.obs_sigma;

    for (const auto& ao : active) {
        const int slot = iterate.extrinsic_slot(ao.teammate_id);
        if (slot < 0) {
            ++block.skipped_unknown;
            continue;
        }
        const ExtrinsicBlock& ext = iterate.extrinsics[slot];
        if (!ext.initialized) {
            ++block.skipped_uninitialized;
            continue;
        }
        const int off = iterate.extrinsic_offset(slot);
        const Eigen::Vector3d u = ext.rot * ao.teammate_pos + ext.pos;
        const Eigen::Vector3d in_body = ri_t * (u - iterate.ego_pos);
        const Eigen::Vector3d z = in_body - ao.observed_body;

        Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, dim);
        jac.setZero();
        jac.block<3, 3>(0, 0) = skew<double>(in_body);
        jac.block<3, 3>(0, 3) = -ri_t;
        jac.block<3, 3>(0, off) = -ri_t * ext.rot * skew<double>(ao.teammate_pos);
        jac.block<3, 3>(0, off + 3) = ri_t;
        zs.push_back(z);
        jacs.push_back(jac);
        ++block.active_count;
        block.observations.push_back({ObsKind::active, ao.teammate_id, z});
    }

    for (const auto& po : passive) {
        const int slot = iterate.extrinsic_slot(po.teammate_id);
        if (slot < 0) {
            ++block.skipped_unknown;
            continue;
        }
        const ExtrinsicBlock& ext = iterate.extrinsics[slot];
        if (!ext.initialized) {
            ++block.skipped_uninitialized;
            continue;
        }
        const int off = iterate.extrinsic_offset(slot);
        const Eigen::Matrix3d rj_t = po.sender_rot.transpose();
        const Eigen::Vector3d w = ext.rot.transpose() * (iterate.ego_pos - ext.pos);
        const Eigen::Vector3d z = rj_t * (w - po.sender_pos) - po.observed_self_body;

        Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, dim);
        jac.setZero();
        jac.block<3, 3>(0, 3) = rj_t * ext.rot.transpose();
        jac.block<3, 3>(0, off) = rj_t * skew<double>(w);
        jac.block<3, 3>(0, off + 3) = -rj_t * ext.rot.transpose();
        zs.push_back(z);
        jacs.push_back(jac);
        ++block.passive_count;
        block.observations.push_back({ObsKind::passive, po.teammate_id, z});
    }

    const int n = static_cast<int>(zs.size());
    block.z.resize(3 * n);
    block.jac.resize(3 * n, dim);
    block.noise_var = Eigen::VectorXd::Constant(3 * n, var);
    for (int i = 0; i < n; ++i) {
        block.z.segment<3>(3 * i) = zs[i];
        block.jac.middleRows<3>(3 * i) = jacs[i];
    }
    return block;
}

// ---------------------------------------------------------------------------

SwarmFilter::SwarmFilter(const std::vector<int>& teammate_ids, const EsikfParams& params)
    : params_(params), state_(SwarmState::make(teammate_ids)), map_(params.map_leaf) {
    const int dim = state_.error_dim();
    cov_ = Eigen::MatrixXd::Zero(dim, dim);
    cov_.block<3, 3>(0, 0) = params.init_att_var * Eigen::Matrix3d::Identity();
    cov_.block<3, 3>(3, 3) = params.init_pos_var * Eigen::Matrix3d::Identity();
    cov_.block<3, 3>(6, 6) = params.init_vel_var * Eigen::Matrix3d::Identity();
    cov_.block<3, 3>(9, 9) = params.init_bg_var * Eigen::Matrix3d::Identity();
    cov_.block<3, 3>(12, 12) = params.init_ba_var * Eigen::Matrix3d::Identity();
    cov_.block<3, 3>(15, 15) = params.init_grav_var * Eigen::Matrix3d::Identity();
    for (size_t k = 0; k < state_.extrinsics.size(); ++k) {
        const int off = state_.extrinsic_offset(static_cast<int>(k));
        // Placeholder for uninitialized blocks; they receive no residuals and
        // no prior pull, so the value never influences the rest of the state.
        cov_.block<6, 6>(off, off) = Eigen::Matrix<double, 6, 6>::Identity();
    }
}

void SwarmFilter::predict(const ImuSample& imu, double dt) {
    if (dt <= 0.0 || dt > 0.1) throw std::invalid_argument("predict: dt out of range (0, 0.1]");
    ImuSample input = imu;
    if (!imu.gyro.allFinite() || !imu.accel.allFinite()) {
        if (!has_last_imu_) return;  // nothing sane to coast with yet
        input = last_imu_;
        input.timestamp = imu.timestamp;
    }
    last_imu_ = input;
    has_last_imu_ = true;

    const Eigen::Vector3d omega = input.gyro - state_.bias_gyro;
    const Eigen::Vector3d accel = input.accel - state_.bias_acc;
    const Eigen::Matrix3d rot = state_.ego_rot;

    // Mean: x <- x boxplus dt * f(x, u, 0).
    state_.ego_pos += state_.ego_vel * dt;
    state_.ego_vel += (rot * accel + state_.gravity) * dt;
    state_.ego_rot = rot * so3_exp<double>(Eigen::Vector3d(omega * dt));

    // Linearized transition.
    const int dim = state_.error_dim();
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(dim, dim);
    f.block<3, 3>(0, 0) = so3_exp<double>(Eigen::Vector3d(-omega * dt));
    f.block<3, 3>(0, 9) = -dt * Eigen::Matrix3d::Identity();
    f.block<3, 3>(3, 6) = dt * Eigen::Matrix3d::Identity();
    f.block<3, 3>(6, 0) = -rot * skew<double>(accel) * dt;
    f.block<3, 3>(6, 12) = -rot * dt;
    f.block<3, 3>(6, 15) = dt * Eigen::Matrix3d::Identity();

    Eigen::VectorXd q = Eigen::VectorXd::Zero(dim);
    q.segment<3>(0).setConstant(params_.gyro_noise * params_.gyro_noise * dt * dt);
    q.segment<3>(6).setConstant(params_.accel_noise * params_.accel_noise * dt * dt);
    q.segment<3>(9).setConstant(params_.bias_gyro_walk * params_.bias_gyro_walk * dt);
    q.segment<3>(12).setConstant(params_.bias_acc_walk * params_.bias_acc_walk * dt);
    for (size_t k = 0; k < state_.extrinsics.size(); ++k) {
        const int off = state_.extrinsic_offset(static_cast<int>(k));
        q.segment<3>(off).setConstant(params_.ext_rot_walk * params_.ext_rot_walk * dt);
        q.segment<3>(off + 3).setConstant(params_.ext_pos_walk * params_.ext_pos_walk * dt);
    }

    cov_ = f * cov_ * f.transpose();
    cov_.diagonal() += q;
    last_imu_time_ = input.timestamp;

    pose_buffer_.push_back({input.timestamp, state_.ego_rot, state_.ego_pos});
    while (pose_buffer_.size() > 2 && pose_buffer_.front().t < input.timestamp - 0.5) {
        pose_buffer_.pop_front();
    }
}

UndistortResult SwarmFilter::undistort_scan(const LidarScan& scan) const {
    UndistortResult res;
    res.points.reserve(scan.points.size());
    if (scan.points.empty()) return res;

    const double t_end = scan.scan_end_time;
    const double t_begin = t_end - scan.duration;

    // Verify IMU pose coverage of the window without gaps.
    bool covered = !pose_buffer_.empty() && pose_buffer_.front().t <= t_begin + params_.max_imu_gap;
    if (covered) {
        double prev = pose_buffer_.front().t;
        for (const auto& ps : pose_buffer_) {
            if (ps.t > t_end) break;
            if (ps.t - prev > params_.max_imu_gap) {
                covered = false;
                break;
            }
            prev = ps.t;
        }
        if (t_end - prev > params_.max_imu_gap) covered = false;
    }
    if (!covered) {
        res.fell_back = true;
        for (const auto& p : scan.points) res.points.push_back(p.pos_body);
        return res;
    }

    const Eigen::Matrix3d rot_end_t = state_.ego_rot.transpose();
    const Eigen::Vector3d pos_end = state_.ego_pos;

    // Piecewise-constant pose lookup; the buffer is time-ordered.
    size_t cursor = 0;
    auto pose_at = [&](double t) -> const PoseStamp& {
        while (cursor + 1 < pose_buffer_.size() && pose_buffer_[cursor + 1].t <= t) ++cursor;
        return pose_buffer_[cursor];
    };

    // Scans are time-ordered by construction of t_offset.
    for (const auto& p : scan.points) {
        const PoseStamp& ps = pose_at(t_begin + p.t_offset);
        res.points.push_back(rot_end_t * (ps.rot * p.pos_body + ps.pos - pos_end));
    }
    return res;
}

UpdateStats SwarmFilter::iterated_update(const ResidualBuilder& builder) {
    UpdateStats stats;
    const int dim = state_.error_dim();
    const SwarmState predicted = state_;
    SwarmState iterate = state_;

    Eigen::LDLT<Eigen::MatrixXd> prior_ldlt(cov_);
    if (prior_ldlt.info() != Eigen::Success) {
        cov_.diagonal().array() += 1e-9;
        prior_ldlt.compute(cov_);
        stats.regularized = true;
    }
    const Eigen::MatrixXd prior_info = prior_ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));

    Eigen::MatrixXd info;
    bool have_info = false;

    for (int iter = 0; iter < params_.max_iter; ++iter) {
        ResidualBlock block = builder(iterate);
        stats.point_count = block.point_count;
        stats.active_count = block.active_count;
        stats.passive_count = block.passive_count;
        if (block.rows() == 0) break;

        const Eigen::VectorXd winv = block.noise_var.cwiseInverse();
        const Eigen::MatrixXd jtw = block.jac.transpose() * winv.asDiagonal();
        info = jtw * block.jac + prior_info;
        const Eigen::VectorXd delta_prior = boxminus(iterate, predicted);
        Eigen::VectorXd rhs = -(jtw * block.z + prior_info * delta_prior);

        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success) {
            info.diagonal().array() += 1e-6;
            ldlt.compute(info);
            stats.regularized = true;
        }
        const Eigen::VectorXd delta = ldlt.solve(rhs);

        iterate = boxplus(iterate, delta);
        have_info = true;
        stats.updated = true;
        stats.iterations = iter + 1;
        if (delta.norm() < params_.eps) {
            stats.converged = true;
            break;
        }
    }

    if (have_info) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success) {
            info.diagonal().array() += 1e-6;
            ldlt.compute(info);
            stats.regularized = true;
        }
        cov_ = ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
        cov_ = 0.5 * (cov_ + cov_.transpose()).eval();

        // Project rotation blocks back onto SO(3) against numeric drift.
        iterate.ego_rot = orthonormalize(iterate.ego_rot);
        for (auto& ext : iterate.extrinsics) ext.rot = orthonormalize(ext.rot);
        state_ = iterate;
        // Keep the undistortion buffer consistent with the posterior.
        if (!pose_buffer_.empty()) {
            pose_buffer_.back().rot = state_.ego_rot;
            pose_buffer_.back().pos = state_.ego_pos;
        }
    }
    return stats;
}

int SwarmFilter::map_update(std::span<const Eigen::Vector3d> pts_body_end) {
    const std::vector<Eigen::Vector3d> down = voxel_downsample(pts_body_end, params_.map_leaf);
    std::vector<Eigen::Vector3d> global;
    global.reserve(down.size());
    for (const auto& p : down) global.push_back(state_.ego_rot * p + state_.ego_pos);
    return map_.insert(global);
}

void SwarmFilter::init_extrinsic(int teammate_id, const ExtrinsicEstimate& estimate,
                                 const Eigen::Matrix<double, 6, 6>& cov0) {
    const int slot = state_.extrinsic_slot(teammate_id);
    if (slot < 0) throw std::invalid_argument("init_extrinsic: unknown teammate id");
    ExtrinsicBlock& ext = state_.extrinsics[slot];
    if (ext.initialized) throw std::logic_error("init_extrinsic: already initialized");
    ext.rot = estimate.rot;
    ext.pos = estimate.pos;
    ext.initialized = true;
    const int off = state_.extrinsic_offset(slot);
    cov_.block(off, 0, 6, state_.error_dim()).setZero();
    cov_.block(0, off, state_.error_dim(), 6).setZero();
    cov_.block<6, 6>(off, off) = cov0;
}

}  // namespace slio
