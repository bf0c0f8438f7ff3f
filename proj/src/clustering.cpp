#include "slio/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slio {

std::vector<LidarPoint> reflectivity_filter(const LidarScan& scan, std::uint8_t threshold) {
    std::vector<LidarPoint> out;
    for (const auto& p : scan.points) {
        if (p.reflectivity > threshold) out.push_back(p);
    }
    return out;
}

size_t VoxelIndex::CellHash::operator()(const CellKey& k) const {
    // 3D hash with large odd multipliers, good enough for desk-scale clouds.
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL ^
                      static_cast<std::uint64_t>(k.y) * 19349669ULL ^
                      static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<size_t>(h);
}

VoxelIndex::CellKey VoxelIndex::key_of(const Eigen::Vector3d& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

VoxelIndex::VoxelIndex(std::span<const Eigen::Vector3d> points, double cell)
    : points_(points.begin(), points.end()), cell_(cell) {
    if (cell <= 0.0) throw std::invalid_argument("VoxelIndex: cell size must be positive");
    for (size_t i = 0; i < points_.size(); ++i) {
        cells_[key_of(points_[i])].push_back(static_cast<int>(i));
    }
}

std::vector<int> VoxelIndex::radius_query(const Eigen::Vector3d& center, double radius,
                                          int* touched) const {
    std::vector<int> out;
    const double r2 = radius * radius;
    const CellKey lo = key_of(center - Eigen::Vector3d::Constant(radius));
    const CellKey hi = key_of(center + Eigen::Vector3d::Constant(radius));
    for (std::int64_t x = lo.x; x <= hi.x; ++x) {
        for (std::int64_t y = lo.y; y <= hi.y; ++y) {
            for (std::int64_t z = lo.z; z <= hi.z; ++z) {
                auto it = cells_.find({x, y, z});
                if (it == cells_.end()) continue;
                for (int idx : it->second) {
                    if (touched) ++*touched;
                    if ((points_[idx] - center).squaredNorm() <= r2) out.push_back(idx);
                }
            }
        }
    }
    return out;
}

void VoxelIndex::neighbor_candidates(const Eigen::Vector3d& p, std::vector<int>& out) const {
    out.clear();
    const CellKey k = key_of(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            for (std::int64_t dz = -1; dz <= 1; ++dz) {
                auto it = cells_.find({k.x + dx, k.y + dy, k.z + dz});
                if (it == cells_.end()) continue;
                out.insert(out.end(), it->second.begin(), it->second.end());
            }
        }
    }
}

namespace {

Cluster make_cluster(std::span<const Eigen::Vector3d> points, std::vector<int> members) {
    Cluster c;
    Eigen::Vector3d lo = points[members[0]];
    Eigen::Vector3d hi = lo;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int idx : members) {
        const Eigen::Vector3d& p = points[idx];
        sum += p;
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    c.point_count = static_cast<int>(members.size());
    c.centroid = sum / c.point_count;
    c.extent = hi - lo;
    c.members = std::move(members);
    return c;
}

}  // namespace

std::vector<Cluster> euclidean_cluster(std::span<const Eigen::Vector3d> points, double dist_tol,
                                       int min_pts, int max_pts) {
    if (dist_tol <= 0.0) throw std::invalid_argument("euclidean_cluster: dist_tol must be > 0");
    std::vector<Cluster> clusters;
    if (points.empty()) return clusters;

    VoxelIndex index(points, dist_tol);
    const double tol2 = dist_tol * dist_tol;
    std::vector<char> visited(points.size(), 0);
    std::vector<int> stack, candidates;

    for (size_t seed = 0; seed < points.size(); ++seed) {
        if (visited[seed]) continue;
        std::vector<int> members;
        visited[seed] = 1;
        stack.assign(1, static_cast<int>(seed));
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            members.push_back(cur);
            index.neighbor_candidates(points[cur], candidates);
            for (int cand : candidates) {
                if (visited[cand]) continue;
                if ((points[cand] - points[cur]).squaredNorm() <= tol2) {
                    visited[cand] = 1;
                    stack.push_back(cand);
                }
            }
        }
        const int n = static_cast<int>(members.size());
        if (n < min_pts || n > max_pts) continue;
        std::sort(members.begin(), members.end());
        clusters.push_back(make_cluster(points, std::move(members)));
    }
    return clusters;
}

std::vector<Cluster> euclidean_cluster(std::span<const LidarPoint> points, double dist_tol,
                                       int min_pts, int max_pts) {
    std::vector<Eigen::Vector3d> pos;
    pos.reserve(points.size());
    for (const auto& p : points) pos.push_back(p.pos_body);
    return euclidean_cluster(std::span<const Eigen::Vector3d>(pos), dist_tol, min_pts, max_pts);
}

std::vector<Cluster> reject_invalid(const std::vector<Cluster>& clusters,
                                    const Eigen::Vector3d& size_min,
                                    const Eigen::Vector3d& size_max) {
    std::vector<Cluster> out;
    for (const auto& c : clusters) {
        if ((c.extent.array() >= size_min.array()).all() &&
            (c.extent.array() <= size_max.array()).all()) {
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace slio
