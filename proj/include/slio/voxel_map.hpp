#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace slio {

/// First-point-per-voxel downsampling, order preserving.
std::vector<Eigen::Vector3d> voxel_downsample(std::span<const Eigen::Vector3d> points,
                                              double leaf);

/// Incremental point map: voxel-hashed store (one point per leaf, kept as
/// the running mean of all samples that fell into the leaf) with a k-d
/// tree rebuilt in place after each insertion batch. Query semantics match
/// an incremental tree at desk scale with far less machinery; averaging
/// keeps plane fits from inheriting single-sample range noise.
class VoxelMap {
public:
    explicit VoxelMap(double leaf = 0.2) : leaf_(leaf) {}

    /// Inserts points. A point landing in an occupied leaf refines that
    /// leaf's mean instead of growing the map. Returns how many new leaves
    /// were created.
    int insert(std::span<const Eigen::Vector3d> points);

    /// Indices and squared distances of the k nearest stored points,
    /// nearest first. Rebuilds the tree first if insertions are pending.
    void knn(const Eigen::Vector3d& query, int k, std::vector<int>& indices,
             std::vector<double>& dist_sq) const;

    size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Eigen::Vector3d& point(int i) const { return points_[i]; }
    double leaf() const { return leaf_; }

private:
    struct Node {
        int point = -1;
        int left = -1;
        int right = -1;
        std::uint8_t axis = 0;
    };

    void rebuild() const;
    int build_range(std::vector<int>& order, int lo, int hi) const;
    void search(int node, const Eigen::Vector3d& q, int k, std::vector<int>& heap_idx,
                std::vector<double>& heap_dist) const;

    double leaf_;
    std::vector<Eigen::Vector3d> points_;
    std::vector<int> samples_;  // per-point sample count for the running mean
    std::unordered_map<std::uint64_t, int> voxel_index_;
    mutable std::vector<Node> nodes_;
    mutable int root_ = -1;
    mutable bool dirty_ = false;
};

}  // namespace slio
