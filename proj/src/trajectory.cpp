#include "slio/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace slio {

Eigen::Matrix3d Trajectory::rotation(double t) const {
    const double psi = yaw(t);
    Eigen::Matrix3d r;
    r << std::cos(psi), -std::sin(psi), 0.0,
         std::sin(psi), std::cos(psi), 0.0,
         0.0, 0.0, 1.0;
    return r;
}

// ---------------------------------------------------------------------------
// Circle

Eigen::Vector3d CircleTrajectory::position(double t) const {
    const double a = c_.omega * t + c_.phase;
    Eigen::Vector3d p = c_.center;
    p.x() += c_.radius * std::cos(a);
    p.y() += c_.radius * std::sin(a);
    if (c_.z_amplitude != 0.0) p.z() += c_.z_amplitude * std::sin(c_.z_omega * t);
    return p;
}

Eigen::Vector3d CircleTrajectory::velocity(double t) const {
    const double a = c_.omega * t + c_.phase;
    Eigen::Vector3d v(-c_.radius * c_.omega * std::sin(a), c_.radius * c_.omega * std::cos(a),
                      0.0);
    if (c_.z_amplitude != 0.0) v.z() = c_.z_amplitude * c_.z_omega * std::cos(c_.z_omega * t);
    return v;
}

Eigen::Vector3d CircleTrajectory::acceleration(double t) const {
    const double a = c_.omega * t + c_.phase;
    const double w2 = c_.omega * c_.omega;
    Eigen::Vector3d acc(-c_.radius * w2 * std::cos(a), -c_.radius * w2 * std::sin(a), 0.0);
    if (c_.z_amplitude != 0.0) {
        acc.z() = -c_.z_amplitude * c_.z_omega * c_.z_omega * std::sin(c_.z_omega * t);
    }
    return acc;
}

double CircleTrajectory::yaw(double t) const {
    if (!c_.yaw_tangent) return c_.yaw_fixed;
    // Velocity heading on the circle advances with the phase angle.
    return c_.omega * t + c_.phase + EIGEN_PI / 2.0;
}

double CircleTrajectory::yaw_rate(double t) const {
    (void)t;
    return c_.yaw_tangent ? c_.omega : 0.0;
}

// ---------------------------------------------------------------------------
// Lissajous

Eigen::Vector3d LissajousTrajectory::position(double t) const {
    Eigen::Vector3d p;
    for (int i = 0; i < 3; ++i) {
        p(i) = c_.center(i) + c_.amplitude(i) * std::sin(c_.omega(i) * t + c_.phase(i));
    }
    return p;
}

Eigen::Vector3d LissajousTrajectory::velocity(double t) const {
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
        v(i) = c_.amplitude(i) * c_.omega(i) * std::cos(c_.omega(i) * t + c_.phase(i));
    }
    return v;
}

Eigen::Vector3d LissajousTrajectory::acceleration(double t) const {
    Eigen::Vector3d a;
    for (int i = 0; i < 3; ++i) {
        a(i) = -c_.amplitude(i) * c_.omega(i) * c_.omega(i) *
               std::sin(c_.omega(i) * t + c_.phase(i));
    }
    return a;
}

// ---------------------------------------------------------------------------
// Waypoints

namespace {
// 6s^5 - 15s^4 + 10s^3 and its derivatives: C^2 smoothstep on [0, 1].
inline void smoothstep(double s, double& v, double& dv, double& ddv) {
    const double s2 = s * s;
    const double s3 = s2 * s;
    v = s3 * (10.0 - 15.0 * s + 6.0 * s2);
    dv = 30.0 * s2 * (1.0 - 2.0 * s + s2);
    ddv = 60.0 * s * (1.0 - 3.0 * s + 2.0 * s2);
}
}  // namespace

WaypointTrajectory::WaypointTrajectory(std::vector<Knot> knots) : knots_(std::move(knots)) {
    if (knots_.empty()) throw std::invalid_argument("WaypointTrajectory: no knots");
    for (size_t i = 1; i < knots_.size(); ++i) {
        if (knots_[i].t <= knots_[i - 1].t) {
            throw std::invalid_argument("WaypointTrajectory: knot times must increase");
        }
    }
}

int WaypointTrajectory::segment_of(double t) const {
    if (t <= knots_.front().t) return -1;
    for (size_t i = 0; i + 1 < knots_.size(); ++i) {
        if (t < knots_[i + 1].t) return static_cast<int>(i);
    }
    return static_cast<int>(knots_.size()) - 1;  // hold past the last knot
}

WaypointTrajectory::Blend WaypointTrajectory::blend(double t, int seg) const {
    const double t0 = knots_[seg].t;
    const double dt = knots_[seg + 1].t - t0;
    Blend b;
    double v, dv, ddv;
    smoothstep((t - t0) / dt, v, dv, ddv);
    b.s = v;
    b.ds = dv / dt;
    b.dds = ddv / (dt * dt);
    return b;
}

Eigen::Vector3d WaypointTrajectory::position(double t) const {
    const int seg = segment_of(t);
    if (seg < 0) return knots_.front().pos;
    if (seg + 1 >= static_cast<int>(knots_.size())) return knots_.back().pos;
    const Blend b = blend(t, seg);
    return knots_[seg].pos + b.s * (knots_[seg + 1].pos - knots_[seg].pos);
}

Eigen::Vector3d WaypointTrajectory::velocity(double t) const {
    const int seg = segment_of(t);
    if (seg < 0 || seg + 1 >= static_cast<int>(knots_.size())) return Eigen::Vector3d::Zero();
    const Blend b = blend(t, seg);
    return b.ds * (knots_[seg + 1].pos - knots_[seg].pos);
}

Eigen::Vector3d WaypointTrajectory::acceleration(double t) const {
    const int seg = segment_of(t);
    if (seg < 0 || seg + 1 >= static_cast<int>(knots_.size())) return Eigen::Vector3d::Zero();
    const Blend b = blend(t, seg);
    return b.dds * (knots_[seg + 1].pos - knots_[seg].pos);
}

double WaypointTrajectory::yaw(double t) const {
    const int seg = segment_of(t);
    if (seg < 0) return knots_.front().yaw;
    if (seg + 1 >= static_cast<int>(knots_.size())) return knots_.back().yaw;
    const Blend b = blend(t, seg);
    return knots_[seg].yaw + b.s * (knots_[seg + 1].yaw - knots_[seg].yaw);
}

double WaypointTrajectory::yaw_rate(double t) const {
    const int seg = segment_of(t);
    if (seg < 0 || seg + 1 >= static_cast<int>(knots_.size())) return 0.0;
    const Blend b = blend(t, seg);
    return b.ds * (knots_[seg + 1].yaw - knots_[seg].yaw);
}

// ---------------------------------------------------------------------------
// Ramp warp

RampedTrajectory::RampedTrajectory(std::shared_ptr<const Trajectory> inner, double ramp)
    : inner_(std::move(inner)), ramp_(ramp) {
    if (ramp_ <= 0.0) throw std::invalid_argument("RampedTrajectory: ramp must be > 0");
}

void RampedTrajectory::warp(double t, double& tau, double& dtau, double& ddtau) const {
    if (t >= ramp_) {
        tau = t;
        dtau = 1.0;
        ddtau = 0.0;
        return;
    }
    if (t <= 0.0) {
        tau = dtau = ddtau = 0.0;
        return;
    }
    // tau = sigma(t/T) * t with sigma the quintic smoothstep: tau(0)=0 with
    // two vanishing derivatives, tau(T)=T with matching slope.
    double s, ds, dds;
    smoothstep(t / ramp_, s, ds, dds);
    tau = s * t;
    dtau = ds * t / ramp_ + s;
    ddtau = dds * t / (ramp_ * ramp_) + 2.0 * ds / ramp_;
}

Eigen::Vector3d RampedTrajectory::position(double t) const {
    double tau, dtau, ddtau;
    warp(t, tau, dtau, ddtau);
    return inner_->position(tau);
}

Eigen::Vector3d RampedTrajectory::velocity(double t) const {
    double tau, dtau, ddtau;
    warp(t, tau, dtau, ddtau);
    return inner_->velocity(tau) * dtau;
}

Eigen::Vector3d RampedTrajectory::acceleration(double t) const {
    double tau, dtau, ddtau;
    warp(t, tau, dtau, ddtau);
    return inner_->acceleration(tau) * dtau * dtau + inner_->velocity(tau) * ddtau;
}

double RampedTrajectory::yaw(double t) const {
    double tau, dtau, ddtau;
    warp(t, tau, dtau, ddtau);
    return inner_->yaw(tau);
}

double RampedTrajectory::yaw_rate(double t) const {
    double tau, dtau, ddtau;
    warp(t, tau, dtau, ddtau);
    return inner_->yaw_rate(tau) * dtau;
}

}  // namespace slio
