#include "slio/world.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace slio {

PlanePatch PlanePatch::make(const Eigen::Vector3d& point, const Eigen::Vector3d& normal,
                            const Eigen::Vector2d& extent, std::uint8_t reflectivity) {
    PlanePatch p;
    p.point = point;
    const double n = normal.norm();
    if (n < 1e-12) throw std::invalid_argument("PlanePatch: zero normal");
    p.normal = normal / n;
    p.extent = extent;
    p.reflectivity = reflectivity;
    const Eigen::Vector3d ref =
        std::abs(p.normal.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    p.axis_u = p.normal.cross(ref).normalized();
    p.axis_v = p.normal.cross(p.axis_u);
    return p;
}

void WorldModel::add_box(const Eigen::Vector3d& center, const Eigen::Vector3d& size,
                         std::uint8_t reflectivity) {
    const Eigen::Vector3d h = size / 2.0;
    planes.push_back(PlanePatch::make(center + Eigen::Vector3d(h.x(), 0, 0),
                                      Eigen::Vector3d::UnitX(), {size.y(), size.z()},
                                      reflectivity));
    planes.push_back(PlanePatch::make(center - Eigen::Vector3d(h.x(), 0, 0),
                                      -Eigen::Vector3d::UnitX(), {size.y(), size.z()},
                                      reflectivity));
    planes.push_back(PlanePatch::make(center + Eigen::Vector3d(0, h.y(), 0),
                                      Eigen::Vector3d::UnitY(), {size.x(), size.z()},
                                      reflectivity));
    planes.push_back(PlanePatch::make(center - Eigen::Vector3d(0, h.y(), 0),
                                      -Eigen::Vector3d::UnitY(), {size.x(), size.z()},
                                      reflectivity));
    planes.push_back(PlanePatch::make(center + Eigen::Vector3d(0, 0, h.z()),
                                      Eigen::Vector3d::UnitZ(), {size.x(), size.y()},
                                      reflectivity));
    planes.push_back(PlanePatch::make(center - Eigen::Vector3d(0, 0, h.z()),
                                      -Eigen::Vector3d::UnitZ(), {size.x(), size.y()},
                                      reflectivity));
}

std::optional<RayHit> WorldModel::raycast(const Eigen::Vector3d& origin,
                                          const Eigen::Vector3d& dir, double max_range,
                                          const std::vector<Eigen::Vector3d>& marker_centers,
                                          const std::vector<int>& marker_ids) const {
    std::optional<RayHit> best;
    double best_range = max_range;

    for (const auto& plane : planes) {
        const double denom = dir.dot(plane.normal);
        if (std::abs(denom) < 1e-12) continue;
        const double t = (plane.point - origin).dot(plane.normal) / denom;
        if (t <= 1e-6 || t >= best_range) continue;
        const Eigen::Vector3d hit = origin + t * dir;
        const Eigen::Vector3d d = hit - plane.point;
        if (std::abs(d.dot(plane.axis_u)) > plane.extent.x() / 2.0) continue;
        if (std::abs(d.dot(plane.axis_v)) > plane.extent.y() / 2.0) continue;
        RayHit h;
        h.range = t;
        h.point = hit;
        h.normal = plane.normal;
        h.reflectivity = plane.reflectivity;
        best = h;
        best_range = t;
    }

    for (size_t i = 0; i < marker_centers.size(); ++i) {
        // Ray-sphere: |o + t d - c|^2 = r^2.
        const Eigen::Vector3d oc = origin - marker_centers[i];
        const double b = oc.dot(dir);
        const double c = oc.squaredNorm() - drone_marker_radius * drone_marker_radius;
        const double disc = b * b - c;
        if (disc < 0.0) continue;
        const double t = -b - std::sqrt(disc);
        if (t <= 1e-6 || t >= best_range) continue;
        RayHit h;
        h.range = t;
        h.point = origin + t * dir;
        h.normal = (h.point - marker_centers[i]).normalized();
        h.reflectivity = marker_reflectivity;
        h.is_marker = true;
        h.marker_drone_id = marker_ids[i];
        best = h;
        best_range = t;
    }
    return best;
}

}  // namespace slio
