#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "slio/so3.hpp"

namespace slio {

/// Global-extrinsic block for one teammate: the rigid transform from the
/// teammate's global frame into ours. Participates in the error state only
/// once `initialized` is set.
struct ExtrinsicBlock {
    int teammate_id = -1;
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    bool initialized = false;
};

/// Full per-drone filter state on the composite manifold
/// SO(3) x R^15 x (SO(3) x R^3)^(N-1).
///
/// Error-vector block layout (tangent space):
///   [0:3)   delta_theta      ego attitude
///   [3:6)   delta_p          ego position
///   [6:9)   delta_v          ego velocity
///   [9:12)  delta_bg         gyro bias
///   [12:15) delta_ba         accel bias
///   [15:18) delta_g          gravity
///   [18+6k : 18+6k+3)  delta_theta_ext[k]
///   [18+6k+3 : 18+6k+6) delta_p_ext[k]
struct SwarmState {
    Eigen::Matrix3d ego_rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d ego_pos = Eigen::Vector3d::Zero();
    Eigen::Vector3d ego_vel = Eigen::Vector3d::Zero();
    Eigen::Vector3d bias_gyro = Eigen::Vector3d::Zero();
    Eigen::Vector3d bias_acc = Eigen::Vector3d::Zero();
    Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -9.81);
    std::vector<ExtrinsicBlock> extrinsics;

    static constexpr int kEgoDim = 18;

    int error_dim() const { return kEgoDim + 6 * static_cast<int>(extrinsics.size()); }

    /// Tangent offset of teammate slot k.
    int extrinsic_offset(int k) const { return kEgoDim + 6 * k; }

    /// Slot index for a teammate id, -1 if absent.
    int extrinsic_slot(int teammate_id) const {
        for (size_t k = 0; k < extrinsics.size(); ++k) {
            if (extrinsics[k].teammate_id == teammate_id) return static_cast<int>(k);
        }
        return -1;
    }

    bool same_layout(const SwarmState& other) const {
        if (extrinsics.size() != other.extrinsics.size()) return false;
        for (size_t k = 0; k < extrinsics.size(); ++k) {
            if (extrinsics[k].teammate_id != other.extrinsics[k].teammate_id) return false;
        }
        return true;
    }

    /// State with identity ego blocks and one uninitialized extrinsic slot
    /// per teammate id, in the given order.
    static SwarmState make(const std::vector<int>& teammate_ids) {
        SwarmState x;
        x.extrinsics.reserve(teammate_ids.size());
        for (int id : teammate_ids) {
            ExtrinsicBlock e;
            e.teammate_id = id;
            x.extrinsics.push_back(e);
        }
        return x;
    }
};

/// Manifold retraction: rotation blocks compose as R * Exp(dtheta),
/// vector blocks add.
inline SwarmState boxplus(const SwarmState& x, const Eigen::VectorXd& delta) {
    if (delta.size() != x.error_dim()) {
        throw std::invalid_argument("boxplus: error vector dimension mismatch");
    }
    SwarmState out = x;
    out.ego_rot = x.ego_rot * so3_exp<double>(delta.segment<3>(0));
    out.ego_pos += delta.segment<3>(3);
    out.ego_vel += delta.segment<3>(6);
    out.bias_gyro += delta.segment<3>(9);
    out.bias_acc += delta.segment<3>(12);
    out.gravity += delta.segment<3>(15);
    for (size_t k = 0; k < x.extrinsics.size(); ++k) {
        const int off = x.extrinsic_offset(static_cast<int>(k));
        out.extrinsics[k].rot = x.extrinsics[k].rot * so3_exp<double>(delta.segment<3>(off));
        out.extrinsics[k].pos += delta.segment<3>(off + 3);
    }
    return out;
}

/// Inverse retraction: rotation blocks Log(R2^T R1), vector blocks subtract.
inline Eigen::VectorXd boxminus(const SwarmState& x1, const SwarmState& x2) {
    if (!x1.same_layout(x2)) {
        throw std::invalid_argument("boxminus: teammate layout mismatch");
    }
    Eigen::VectorXd delta(x1.error_dim());
    delta.segment<3>(0) = so3_log<double>(Eigen::Matrix3d(x2.ego_rot.transpose() * x1.ego_rot));
    delta.segment<3>(3) = x1.ego_pos - x2.ego_pos;
    delta.segment<3>(6) = x1.ego_vel - x2.ego_vel;
    delta.segment<3>(9) = x1.bias_gyro - x2.bias_gyro;
    delta.segment<3>(12) = x1.bias_acc - x2.bias_acc;
    delta.segment<3>(15) = x1.gravity - x2.gravity;
    for (size_t k = 0; k < x1.extrinsics.size(); ++k) {
        const int off = x1.extrinsic_offset(static_cast<int>(k));
        delta.segment<3>(off) = so3_log<double>(
            Eigen::Matrix3d(x2.extrinsics[k].rot.transpose() * x1.extrinsics[k].rot));
        delta.segment<3>(off + 3) = x1.extrinsics[k].pos - x2.extrinsics[k].pos;
    }
    return delta;
}

}  // namespace slio
