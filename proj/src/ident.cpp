#include "slio/ident.hpp"

#include <set>
#include <stdexcept>

namespace slio {

ExcitationResult traj_excited(const TrajWindow& w, double sigma2_min) {
    if (w.size() < 3) {
        throw std::invalid_argument("traj_excited: need at least 3 window entries");
    }
    ExcitationResult res;
    res.singular_values = scatter_singular_values(w.positions());
    res.excited = res.singular_values(1) > sigma2_min;
    return res;
}

MatchResult traj_match(const TrajWindow& a, const TrajWindow& b, double tol, double sigma2_min) {
    MatchResult res;
    const auto pairs = associate_by_time(a, b, tol);
    res.pair_count = pairs.size();
    if (pairs.size() < 3) {
        res.status = MatchStatus::not_enough_data;
        return res;
    }

    Eigen::Matrix3Xd pa(3, pairs.size()), pb(3, pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
        pa.col(k) = a[pairs[k].first].position;
        pb.col(k) = b[pairs[k].second].position;
    }

    // The associated subset must itself be excited, otherwise no unique
    // transform exists (straight-line ambiguity).
    const Eigen::Vector3d sv = scatter_singular_values(pa);
    if (sv(1) <= sigma2_min) {
        res.status = MatchStatus::degenerate;
        return res;
    }

    const RigidFit<double> fit = fit_rigid(pa, pb);
    res.status = MatchStatus::ok;
    res.residual_rms = fit.rms;
    res.transform.rot = fit.rot;
    res.transform.pos = fit.pos;
    res.transform.residual_rms = fit.rms;
    return res;
}

std::vector<Assignment> identify(const std::vector<TrackerState>& trackers,
                                 const std::map<int, TrajWindow>& received,
                                 const IdentParams& params) {
    std::vector<Assignment> out;
    std::set<int> taken;
    for (const auto& tr : trackers) {
        if (tr.kind != TrackerKind::temporary) continue;
        if (tr.trajectory.size() < 3) continue;
        if (!traj_excited(tr.trajectory, params.sigma2_min).excited) continue;
        for (const auto& [teammate_id, traj] : received) {
            if (taken.count(teammate_id)) continue;
            const MatchResult m =
                traj_match(tr.trajectory, traj, params.assoc_tol, params.sigma2_min);
            if (m.status != MatchStatus::ok) continue;
            if (m.residual_rms < params.residual_thr) {
                out.push_back({tr.tracker_id, teammate_id, m.transform});
                taken.insert(teammate_id);
                break;
            }
        }
    }
    return out;
}

}  // namespace slio
