#include <doctest.h>

#include "slio/trajectory.hpp"

using namespace slio;

namespace {

// Central-difference check of the analytic derivatives.
void check_derivatives(const Trajectory& traj, double t0, double t1) {
    const double h = 1e-5;
    for (double t = t0; t <= t1; t += (t1 - t0) / 23.0) {
        const Eigen::Vector3d v_num =
            (traj.position(t + h) - traj.position(t - h)) / (2.0 * h);
        const Eigen::Vector3d a_num =
            (traj.velocity(t + h) - traj.velocity(t - h)) / (2.0 * h);
        CHECK((traj.velocity(t) - v_num).norm() < 1e-6);
        CHECK((traj.acceleration(t) - a_num).norm() < 1e-5);
        const double yr_num = (traj.yaw(t + h) - traj.yaw(t - h)) / (2.0 * h);
        CHECK(traj.yaw_rate(t) == doctest::Approx(yr_num).epsilon(1e-4));
    }
}

}  // namespace

TEST_CASE("hover is constant") {
    HoverTrajectory h({1.0, 2.0, 3.0}, 0.5);
    CHECK((h.position(7.0) - Eigen::Vector3d(1.0, 2.0, 3.0)).norm() == 0.0);
    CHECK(h.velocity(7.0).norm() == 0.0);
    CHECK(h.acceleration(7.0).norm() == 0.0);
    CHECK(h.omega_body(7.0).norm() == 0.0);
}

TEST_CASE("circle kinematics: centripetal acceleration omega^2 r") {
    CircleTrajectory::Config c;
    c.center = {0.0, 0.0, 1.0};
    c.radius = 2.0;
    c.omega = 1.0;
    CircleTrajectory traj(c);
    CHECK(traj.velocity(0.3).norm() == doctest::Approx(2.0));
    CHECK(traj.acceleration(0.3).norm() == doctest::Approx(2.0));
    check_derivatives(traj, 0.0, 6.0);
}

TEST_CASE("circle with tangent yaw spins at omega") {
    CircleTrajectory::Config c;
    c.radius = 1.0;
    c.omega = 0.7;
    c.yaw_tangent = true;
    CircleTrajectory traj(c);
    CHECK(traj.yaw_rate(2.0) == doctest::Approx(0.7));
    CHECK(traj.omega_body(2.0).z() == doctest::Approx(0.7));
    check_derivatives(traj, 0.0, 5.0);
}

TEST_CASE("lissajous derivatives") {
    LissajousTrajectory::Config c;
    c.center = {1.0, -1.0, 2.0};
    c.amplitude = {1.5, 1.0, 0.4};
    c.omega = {0.9, 1.3, 0.7};
    c.yaw_spin_rate = 0.2;
    LissajousTrajectory traj(c);
    check_derivatives(traj, 0.0, 8.0);
}

TEST_CASE("waypoints: C2 hover-and-advance, rest at knots") {
    std::vector<WaypointTrajectory::Knot> knots{
        {0.0, {0.0, 0.0, 1.0}, 0.0},
        {5.0, {0.0, 0.0, 1.0}, 0.0},       // hold
        {10.0, {4.0, 2.0, 1.5}, 1.0},      // move
        {15.0, {4.0, 2.0, 1.5}, 1.0},      // hold again
    };
    WaypointTrajectory traj(knots);
    CHECK((traj.position(2.0) - Eigen::Vector3d(0.0, 0.0, 1.0)).norm() == 0.0);
    CHECK(traj.velocity(5.0).norm() < 1e-12);
    CHECK(traj.velocity(10.0).norm() < 1e-12);
    CHECK(traj.acceleration(10.0).norm() < 1e-9);
    CHECK((traj.position(12.0) - Eigen::Vector3d(4.0, 2.0, 1.5)).norm() == 0.0);
    CHECK((traj.position(100.0) - Eigen::Vector3d(4.0, 2.0, 1.5)).norm() == 0.0);
    CHECK(traj.yaw(12.0) == doctest::Approx(1.0));
    check_derivatives(traj, 0.1, 14.9);
}

TEST_CASE("waypoint knots must strictly increase") {
    std::vector<WaypointTrajectory::Knot> knots{{0.0, {}, 0.0}, {0.0, {}, 0.0}};
    CHECK_THROWS_AS(WaypointTrajectory(std::move(knots)), std::invalid_argument);
}

TEST_CASE("ramped trajectory starts at rest and matches the inner one later") {
    CircleTrajectory::Config c;
    c.radius = 1.5;
    c.omega = 1.2;
    auto inner = std::make_shared<CircleTrajectory>(c);
    RampedTrajectory traj(inner, 2.0);

    CHECK((traj.position(0.0) - inner->position(0.0)).norm() < 1e-12);
    CHECK(traj.velocity(0.0).norm() < 1e-12);
    CHECK(traj.acceleration(0.0).norm() < 1e-9);
    // Past the ramp the warp is the identity.
    CHECK((traj.position(3.0) - inner->position(3.0)).norm() < 1e-12);
    CHECK((traj.velocity(3.0) - inner->velocity(3.0)).norm() < 1e-12);
    check_derivatives(traj, 0.05, 4.0);
}
