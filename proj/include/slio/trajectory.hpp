#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "slio/lidar_types.hpp"

namespace slio {

/// Analytic ground-truth trajectory: twice-differentiable position plus a
/// yaw schedule (attitude is yaw-only; drones fly level). Angular velocity
/// and linear acceleration have closed forms, so synthesized IMU data is
/// exact up to sensor noise.
class Trajectory {
public:
    virtual ~Trajectory() = default;

    virtual Eigen::Vector3d position(double t) const = 0;
    virtual Eigen::Vector3d velocity(double t) const = 0;
    virtual Eigen::Vector3d acceleration(double t) const = 0;
    virtual double yaw(double t) const = 0;
    virtual double yaw_rate(double t) const = 0;

    Eigen::Matrix3d rotation(double t) const;
    Pose pose(double t) const { return {rotation(t), position(t)}; }
    /// Body angular rate; for yaw-only attitude this is (0, 0, yaw_rate).
    Eigen::Vector3d omega_body(double t) const {
        return Eigen::Vector3d(0.0, 0.0, yaw_rate(t));
    }
};

struct TrueTrajectory {
    int drone_id = 0;
    std::shared_ptr<const Trajectory> traj;
};

class HoverTrajectory final : public Trajectory {
public:
    HoverTrajectory(const Eigen::Vector3d& pos, double yaw) : pos_(pos), yaw_(yaw) {}
    Eigen::Vector3d position(double) const override { return pos_; }
    Eigen::Vector3d velocity(double) const override { return Eigen::Vector3d::Zero(); }
    Eigen::Vector3d acceleration(double) const override { return Eigen::Vector3d::Zero(); }
    double yaw(double) const override { return yaw_; }
    double yaw_rate(double) const override { return 0.0; }

private:
    Eigen::Vector3d pos_;
    double yaw_;
};

/// Horizontal circle with optional vertical bobbing and either a fixed yaw
/// or yaw following the velocity tangent.
class CircleTrajectory final : public Trajectory {
public:
    struct Config {
        Eigen::Vector3d center = Eigen::Vector3d::Zero();
        double radius = 1.0;
        double omega = 1.0;  // rad/s
        double phase = 0.0;
        double z_amplitude = 0.0;
        double z_omega = 0.0;
        bool yaw_tangent = false;
        double yaw_fixed = 0.0;
    };
    explicit CircleTrajectory(const Config& c) : c_(c) {}

    Eigen::Vector3d position(double t) const override;
    Eigen::Vector3d velocity(double t) const override;
    Eigen::Vector3d acceleration(double t) const override;
    double yaw(double t) const override;
    double yaw_rate(double t) const override;

private:
    Config c_;
};

/// Three independent sinusoids, a simple well-excited 3D pattern.
class LissajousTrajectory final : public Trajectory {
public:
    struct Config {
        Eigen::Vector3d center = Eigen::Vector3d::Zero();
        Eigen::Vector3d amplitude = Eigen::Vector3d(1.0, 1.0, 0.3);
        Eigen::Vector3d omega = Eigen::Vector3d(0.7, 1.1, 0.9);
        Eigen::Vector3d phase = Eigen::Vector3d::Zero();
        double yaw_fixed = 0.0;
        double yaw_spin_rate = 0.0;
    };
    explicit LissajousTrajectory(const Config& c) : c_(c) {}

    Eigen::Vector3d position(double t) const override;
    Eigen::Vector3d velocity(double t) const override;
    Eigen::Vector3d acceleration(double t) const override;
    double yaw(double t) const override { return c_.yaw_fixed + c_.yaw_spin_rate * t; }
    double yaw_rate(double t) const override { (void)t; return c_.yaw_spin_rate; }

private:
    Config c_;
};

/// Piecewise quintic-smoothstep interpolation through timed knots; velocity
/// and acceleration vanish at every knot, which makes hover-and-advance
/// scripts C^2 everywhere. Yaw interpolates the same way.
class WaypointTrajectory final : public Trajectory {
public:
    struct Knot {
        double t = 0.0;
        Eigen::Vector3d pos = Eigen::Vector3d::Zero();
        double yaw = 0.0;
    };
    explicit WaypointTrajectory(std::vector<Knot> knots);

    Eigen::Vector3d position(double t) const override;
    Eigen::Vector3d velocity(double t) const override;
    Eigen::Vector3d acceleration(double t) const override;
    double yaw(double t) const override;
    double yaw_rate(double t) const override;

private:
    struct Blend {
        double s = 0.0, ds = 0.0, dds = 0.0;  // smoothstep value and time derivatives
    };
    int segment_of(double t) const;
    Blend blend(double t, int seg) const;

    std::vector<Knot> knots_;
};

/// Wraps another trajectory with a C^2 monotone time warp so that motion
/// starts from rest: tau(0) = 0, tau'(0) = tau''(0) = 0 and tau(t) = t for
/// t >= ramp. Keeps synthesized IMU consistent with a static start.
class RampedTrajectory final : public Trajectory {
public:
    RampedTrajectory(std::shared_ptr<const Trajectory> inner, double ramp);

    Eigen::Vector3d position(double t) const override;
    Eigen::Vector3d velocity(double t) const override;
    Eigen::Vector3d acceleration(double t) const override;
    double yaw(double t) const override;
    double yaw_rate(double t) const override;

private:
    void warp(double t, double& tau, double& dtau, double& ddtau) const;

    std::shared_ptr<const Trajectory> inner_;
    double ramp_;
};

}  // namespace slio
