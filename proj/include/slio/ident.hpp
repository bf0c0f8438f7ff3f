#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "slio/registration.hpp"
#include "slio/tracker.hpp"
#include "slio/traj_window.hpp"

namespace slio {

struct ExtrinsicEstimate {
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    double residual_rms = 0.0;
};

struct IdentParams {
    size_t window_capacity = 100;  // sliding window length
    double assoc_tol = 0.025;      // timestamp association tolerance, s
    double residual_thr = 0.1;     // trajectory-match acceptance, m RMS
    double sigma2_min = 0.05;      // excitation: second singular value of H, m^2
};

struct ExcitationResult {
    bool excited = false;
    Eigen::Vector3d singular_values = Eigen::Vector3d::Zero();  // descending
};

/// Excitation (shape) of a trajectory window: singular values of the scatter
/// matrix H = sum (p - c)(p - c)^T. Excited iff the second largest exceeds
/// sigma2_min. Throws if the window has fewer than 3 entries.
ExcitationResult traj_excited(const TrajWindow& w, double sigma2_min);

enum class MatchStatus { ok, not_enough_data, degenerate };

struct MatchResult {
    MatchStatus status = MatchStatus::not_enough_data;
    double residual_rms = 0.0;
    ExtrinsicEstimate transform;  // maps frame-of-b positions into frame-of-a
    size_t pair_count = 0;
};

/// Timestamp-associated rigid trajectory matching: finds T minimizing the
/// least-squares misfit sum ||a_k - T b_k||^2 over associated pairs,
/// closed form. Requires >= 3 associated pairs and a non-degenerate
/// (excited) associated subset.
MatchResult traj_match(const TrajWindow& a, const TrajWindow& b, double tol, double sigma2_min);

struct Assignment {
    int tracker_id = 0;
    int teammate_id = 0;
    ExtrinsicEstimate extrinsic;
};

/// Alg-style identity assignment: for each excited tracker trajectory, try
/// each candidate teammate trajectory in order; the first match with
/// residual below the threshold wins. One-to-one per call: a teammate id is
/// assigned to at most one tracker.
std::vector<Assignment> identify(const std::vector<TrackerState>& trackers,
                                 const std::map<int, TrajWindow>& received,
                                 const IdentParams& params);

}  // namespace slio
