#include <doctest.h>

#include "slio/ident.hpp"
#include "slio/rng.hpp"
#include "slio/so3.hpp"

using namespace slio;

namespace {

TrajWindow circle_window(int n, double radius, const Eigen::Vector3d& center, double t0 = 0.0) {
    TrajWindow w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = 0.5 * i * 0.1;
        w.push(t0 + i * 0.1,
               center + radius * Eigen::Vector3d(std::cos(a), std::sin(a), 0.0));
    }
    return w;
}

TrajWindow transformed(const TrajWindow& src, const Eigen::Matrix3d& rot,
                       const Eigen::Vector3d& pos) {
    // Positions of the same object expressed in another frame:
    // p_src = rot * p_out + pos  =>  p_out = rot^T (p_src - pos).
    TrajWindow out(src.capacity());
    for (size_t i = 0; i < src.size(); ++i) {
        out.push(src[i].timestamp, rot.transpose() * (src[i].position - pos));
    }
    return out;
}

}  // namespace

TEST_CASE("collinear windows are not excited") {
    TrajWindow w(100);
    for (int i = 0; i < 50; ++i) w.push(i * 0.1, i * Eigen::Vector3d(0.1, 0.2, 0.0));
    const auto res = traj_excited(w, 0.05);
    CHECK_FALSE(res.excited);
    CHECK(res.singular_values(1) < 1e-9);
}

TEST_CASE("a circle of radius 1 m is excited, singular values = K/2") {
    const int k = 100;
    TrajWindow w(k);
    for (int i = 0; i < k; ++i) {
        const double a = 2.0 * EIGEN_PI * i / k;
        w.push(i * 0.1, Eigen::Vector3d(std::cos(a), std::sin(a), 0.0));
    }
    const auto res = traj_excited(w, 0.05);
    CHECK(res.excited);
    CHECK(res.singular_values(0) == doctest::Approx(k / 2.0).epsilon(1e-9));
    CHECK(res.singular_values(1) == doctest::Approx(k / 2.0).epsilon(1e-9));
    CHECK(res.singular_values(2) < 1e-9);
}

TEST_CASE("identical points are not excited; tiny windows throw") {
    TrajWindow w(10);
    w.push(0.0, Eigen::Vector3d::Ones());
    w.push(0.1, Eigen::Vector3d::Ones());
    CHECK_THROWS_AS(traj_excited(w, 0.05), std::invalid_argument);
    w.push(0.2, Eigen::Vector3d::Ones());
    const auto res = traj_excited(w, 0.05);
    CHECK_FALSE(res.excited);
    CHECK(res.singular_values.norm() < 1e-12);
}

TEST_CASE("traj_match: identical windows give identity") {
    const TrajWindow a = circle_window(60, 1.0, {2.0, 0.0, 1.0});
    const auto m = traj_match(a, a, 0.025, 0.05);
    REQUIRE(m.status == MatchStatus::ok);
    CHECK(m.residual_rms < 1e-12);
    CHECK((m.transform.rot - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(m.transform.pos.norm() < 1e-12);
}

TEST_CASE("traj_match recovers a random transform, 100 noiseless trials") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
        axis.normalize();
        const Eigen::Matrix3d rot =
            so3_exp<double>(Eigen::Vector3d(axis * rng.uniform(0.0, 3.0)));
        const Eigen::Vector3d pos(rng.normal(4.0), rng.normal(4.0), rng.normal(4.0));
        const TrajWindow a = circle_window(50, 1.0 + rng.uniform(0.0, 1.0),
                                           {rng.normal(2.0), rng.normal(2.0), 1.0});
        const TrajWindow b = transformed(a, rot, pos);
        const auto m = traj_match(a, b, 0.025, 0.05);
        REQUIRE(m.status == MatchStatus::ok);
        CHECK(rotation_angle_between(m.transform.rot, rot) < 1e-9);
        CHECK((m.transform.pos - pos).norm() < 1e-9);
        CHECK(m.residual_rms < 1e-9);
    }
}

TEST_CASE("traj_match refuses short or degenerate inputs") {
    TrajWindow a(10), b(10);
    a.push(0.0, {0, 0, 0});
    b.push(0.0, {1, 0, 0});
    a.push(0.1, {1, 0, 0});
    b.push(0.1, {2, 0, 0});
    CHECK(traj_match(a, b, 0.025, 0.05).status == MatchStatus::not_enough_data);

    // Plenty of pairs, but a straight line: degenerate.
    TrajWindow c(50), d(50);
    for (int i = 0; i < 50; ++i) {
        c.push(i * 0.1, i * Eigen::Vector3d(0.1, 0.0, 0.0));
        d.push(i * 0.1, i * Eigen::Vector3d(0.0, 0.1, 0.0));
    }
    CHECK(traj_match(c, d, 0.025, 0.05).status == MatchStatus::degenerate);
}

TEST_CASE("identify assigns matching teammates one-to-one") {
    const Eigen::Matrix3d rot = so3_exp<double>(Eigen::Vector3d(0.0, 0.0, 1.2));
    const Eigen::Vector3d pos(3.0, -1.0, 0.5);

    // Two trackers following two distinct teammate trajectories.
    TrackerState tr1 = TrackerState::spawn(1, Eigen::Vector3d::Zero(), -1.0, {});
    TrackerState tr2 = TrackerState::spawn(2, Eigen::Vector3d::Zero(), -1.0, {});
    tr1.trajectory = circle_window(40, 1.0, {2.0, 0.0, 1.0});
    tr2.trajectory = circle_window(40, 1.6, {-3.0, 2.0, 1.5});

    std::map<int, TrajWindow> received;
    received[7] = transformed(tr1.trajectory, rot, pos);
    received[9] = transformed(tr2.trajectory, rot, pos);

    IdentParams params;
    const auto assignments = identify({tr1, tr2}, received, params);
    REQUIRE(assignments.size() == 2);
    for (const auto& a : assignments) {
        if (a.tracker_id == 1) CHECK(a.teammate_id == 7);
        if (a.tracker_id == 2) CHECK(a.teammate_id == 9);
        CHECK(rotation_angle_between(a.extrinsic.rot, rot) < 1e-9);
        CHECK((a.extrinsic.pos - pos).norm() < 1e-9);
    }
}

TEST_CASE("identify never assigns one teammate to two trackers") {
    TrackerState tr1 = TrackerState::spawn(1, Eigen::Vector3d::Zero(), -1.0, {});
    TrackerState tr2 = TrackerState::spawn(2, Eigen::Vector3d::Zero(), -1.0, {});
    tr1.trajectory = circle_window(40, 1.0, {0.0, 0.0, 1.0});
    tr2.trajectory = tr1.trajectory;  // duplicate observation of the same motion

    std::map<int, TrajWindow> received;
    received[7] = tr1.trajectory;

    const auto assignments = identify({tr1, tr2}, received, IdentParams{});
    REQUIRE(assignments.size() == 1);
    CHECK(assignments[0].teammate_id == 7);
}

TEST_CASE("a static decoy trajectory is never identified") {
    TrackerState tr = TrackerState::spawn(1, Eigen::Vector3d(4.0, 4.0, 1.0), -1.0, {});
    for (int i = 1; i < 50; ++i) tr.trajectory.push(i * 0.1, Eigen::Vector3d(4.0, 4.0, 1.0));

    std::map<int, TrajWindow> received;
    received[7] = circle_window(40, 1.0, {0.0, 0.0, 1.0});
    CHECK(identify({tr}, received, IdentParams{}).empty());
}

TEST_CASE("mismatched trajectories stay unassigned") {
    TrackerState tr = TrackerState::spawn(1, Eigen::Vector3d::Zero(), -1.0, {});
    tr.trajectory = circle_window(40, 1.0, {2.0, 0.0, 1.0});
    std::map<int, TrajWindow> received;
    received[7] = circle_window(40, 2.5, {-4.0, 1.0, 2.0}, 0.013);  // different shape
    const auto assignments = identify({tr}, received, IdentParams{});
    CHECK(assignments.empty());
}
