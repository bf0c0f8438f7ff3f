#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace slio {

/// Finite rectangular plane patch with a constant surface reflectivity.
struct PlanePatch {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();   // center
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ(); // unit length
    Eigen::Vector2d extent = Eigen::Vector2d(10.0, 10.0);
    std::uint8_t reflectivity = 30;

    // In-plane axes, derived deterministically from the normal.
    Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();
    Eigen::Vector3d axis_v = Eigen::Vector3d::UnitY();

    static PlanePatch make(const Eigen::Vector3d& point, const Eigen::Vector3d& normal,
                           const Eigen::Vector2d& extent, std::uint8_t reflectivity);
};

struct RayHit {
    double range = 0.0;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();   // world frame
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ(); // surface normal at hit
    std::uint8_t reflectivity = 0;
    bool is_marker = false;
    int marker_drone_id = -1;
};

/// Static plane-based environment plus reflective drone markers. Teammate
/// bodies are rendered as spheres whose surface carries the reflective-tape
/// reflectivity.
struct WorldModel {
    std::vector<PlanePatch> planes;
    double drone_marker_radius = 0.25;
    std::uint8_t marker_reflectivity = 255;

    /// Axis-aligned box as six patches (a cheap way to add structure).
    void add_box(const Eigen::Vector3d& center, const Eigen::Vector3d& size,
                 std::uint8_t reflectivity);

    /// Nearest intersection of the ray (origin, unit dir) with the planes and
    /// with marker spheres at `marker_centers` (id parallel array), within
    /// max_range. Misses return nullopt.
    std::optional<RayHit> raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                  double max_range,
                                  const std::vector<Eigen::Vector3d>& marker_centers,
                                  const std::vector<int>& marker_ids) const;
};

}  // namespace slio
