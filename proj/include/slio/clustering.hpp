#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "slio/lidar_types.hpp"

namespace slio {

struct Cluster {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    Eigen::Vector3d extent = Eigen::Vector3d::Zero();  // axis-aligned bounding box size
    int point_count = 0;
    std::vector<int> members;  // indices into the input point set
};

/// Points with reflectivity strictly above the threshold, order preserved.
std::vector<LidarPoint> reflectivity_filter(const LidarScan& scan, std::uint8_t threshold);

/// Connected components under the "within dist_tol of some member" relation,
/// computed with a voxel-hash neighbor index. Components with fewer than
/// min_pts or more than max_pts points are discarded.
std::vector<Cluster> euclidean_cluster(std::span<const Eigen::Vector3d> points, double dist_tol,
                                       int min_pts, int max_pts);

std::vector<Cluster> euclidean_cluster(std::span<const LidarPoint> points, double dist_tol,
                                       int min_pts, int max_pts);

/// Keeps clusters whose bounding-box extent lies within [size_min, size_max]
/// componentwise.
std::vector<Cluster> reject_invalid(const std::vector<Cluster>& clusters,
                                    const Eigen::Vector3d& size_min,
                                    const Eigen::Vector3d& size_max);

/// Spatial hash over points, cell size = dist_tol. Shared by clustering and
/// the predicted-region re-clustering path, where the point-touch counter
/// bounds the work done per query.
class VoxelIndex {
public:
    VoxelIndex(std::span<const Eigen::Vector3d> points, double cell);

    /// Indices of points within `radius` of `center`; `touched`, if given,
    /// accumulates how many candidate points were examined.
    std::vector<int> radius_query(const Eigen::Vector3d& center, double radius,
                                  int* touched = nullptr) const;

    /// Neighbor candidates from the 27-cell stencil around the point's cell.
    void neighbor_candidates(const Eigen::Vector3d& p, std::vector<int>& out) const;

    size_t size() const { return points_.size(); }
    const Eigen::Vector3d& point(int i) const { return points_[i]; }

private:
    struct CellKey {
        std::int64_t x, y, z;
        bool operator==(const CellKey&) const = default;
    };
    struct CellHash {
        size_t operator()(const CellKey& k) const;
    };
    CellKey key_of(const Eigen::Vector3d& p) const;

    std::vector<Eigen::Vector3d> points_;
    double cell_;
    std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

}  // namespace slio
