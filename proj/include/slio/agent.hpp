#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "slio/bus.hpp"
#include "slio/clustering.hpp"
#include "slio/esikf.hpp"
#include "slio/ident.hpp"
#include "slio/mpsc_queue.hpp"
#include "slio/tracker.hpp"
#include "slio/wire.hpp"

namespace slio {

struct AgentParams {
    int drone_id = 0;
    std::vector<int> teammate_ids;
    double scan_period = 0.1;
    double clock_offset = 0.0;   // added to outgoing message timestamps
    bool mutual_obs = true;      // off = plain single-agent LIO residuals

    // detection
    std::uint8_t reflectivity_threshold = 200;
    double cluster_dist_tol = 0.3;
    int cluster_min_pts = 3;
    int cluster_max_pts = 500;
    Eigen::Vector3d size_min = Eigen::Vector3d::Constant(0.05);
    Eigen::Vector3d size_max = Eigen::Vector3d::Constant(0.8);
    /// Radial push from the visible-surface centroid toward the marker
    /// center (clusters only see the near side of the marker sphere).
    double center_offset = 0.125;
    double map_exclude_radius = 0.5;  // keep moving teammates out of the map

    TrackerParams tracker;
    IdentParams ident;
    EsikfParams esikf;

    double gravity_init_window = 0.5;  // s of static accel averaging
    double max_feed_age = 0.3;         // teammate odometry freshness for trackers
    double max_passive_age = 0.2;      // passive observations older than this die
    double reacq_gap = 10.0;           // visual gap that counts as re-acquisition
};

struct ScanRecord {
    double t = 0.0;
    bool processed = false;
    bool map_bootstrap = false;
    Pose est;
    int point_residuals = 0;
    int active_residuals = 0;
    int passive_residuals = 0;
    int iterations = 0;
    bool converged = false;
    bool undistort_fell_back = false;
    int trackers_alive = 0;
    int teammates_identified = 0;
    double proc_ms = 0.0;
};

struct ReacqEvent {
    double t = 0.0;
    int teammate_id = -1;
    double gap_s = 0.0;        // time without visual contact
    double innovation_m = 0.0; // predicted-vs-detected distance at re-entry
};

/// One drone's full estimator stack: ESIKF + teammate detection, tracking
/// and identification, fed by IMU, LiDAR scans and the network inbox.
/// All mutation happens on the owner's thread; only `deliver` may be called
/// concurrently.
class Agent {
public:
    explicit Agent(const AgentParams& params);

    /// Thread-safe: queue an incoming bus delivery.
    void deliver(const Delivery& d) { inbox_.push(d); }

    void on_imu(const ImuSample& sample);

    /// Scan-end pipeline. Outgoing wire messages are appended to `out`;
    /// the caller broadcasts them (two-phase exchange keeps runs
    /// deterministic under threading).
    ScanRecord on_scan(const LidarScan& scan, std::vector<std::vector<std::uint8_t>>& out);

    const SwarmFilter& filter() const { return filter_; }
    SwarmFilter& mutable_filter() { return filter_; }
    const std::vector<TrackerState>& trackers() const { return trackers_; }
    bool gravity_ready() const { return gravity_ready_; }
    int drone_id() const { return params_.drone_id; }
    const AgentParams& params() const { return params_; }
    const std::map<int, double>& identified_at() const { return identified_at_; }
    const std::vector<ReacqEvent>& reacq_events() const { return reacq_events_; }
    std::uint64_t decode_errors() const { return decode_errors_; }

private:
    struct TeammateLink {
        TrajWindow traj{100};
        std::deque<EgoStateMsg> recent_egos;  // newest at back
        double last_ego_ts = -1.0;
        double last_obs_ts = -1.0;
    };

    void drain_inbox(double t_now);
    std::optional<EgoStateMsg> freshest_ego(int id, double t_now, double max_age) const;
    std::optional<EgoStateMsg> ego_at(int id, double timestamp, double tol) const;

    AgentParams params_;
    SwarmFilter filter_;
    MpscQueue<Delivery> inbox_;
    std::vector<TrackerState> trackers_;
    std::map<int, TeammateLink> links_;
    std::deque<ObservationMsg> passive_obs_;
    std::map<int, double> identified_at_;
    std::vector<ReacqEvent> reacq_events_;

    std::vector<ImuSample> warmup_;
    bool gravity_ready_ = false;
    bool map_ready_ = false;
    double last_scan_time_ = -1.0;
    int next_tracker_id_ = 1;
    std::uint32_t seq_ = 0;
    std::uint64_t decode_errors_ = 0;
};

}  // namespace slio
