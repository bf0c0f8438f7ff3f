#include "slio/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slio {

namespace {

std::uint64_t voxel_key(const Eigen::Vector3d& p, double leaf) {
    // 21 bits per axis, offset to keep coordinates positive.
    const auto q = [&](double v) {
        return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / leaf)) +
                                          (1 << 20)) &
               0x1fffffULL;
    };
    return q(p.x()) | (q(p.y()) << 21) | (q(p.z()) << 42);
}

}  // namespace

std::vector<Eigen::Vector3d> voxel_downsample(std::span<const Eigen::Vector3d> points,
                                              double leaf) {
    std::unordered_set<std::uint64_t> seen;
    std::vector<Eigen::Vector3d> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        if (seen.insert(voxel_key(p, leaf)).second) out.push_back(p);
    }
    return out;
}

int VoxelMap::insert(std::span<const Eigen::Vector3d> points) {
    int added = 0;
    for (const auto& p : points) {
        const auto [it, fresh] =
            voxel_index_.try_emplace(voxel_key(p, leaf_), static_cast<int>(points_.size()));
        if (fresh) {
            points_.push_back(p);
            samples_.push_back(1);
            ++added;
        } else {
            const int idx = it->second;
            const int n = ++samples_[idx];
            points_[idx] += (p - points_[idx]) / static_cast<double>(n);
        }
    }
    if (!points.empty()) dirty_ = true;
    return added;
}

int VoxelMap::build_range(std::vector<int>& order, int lo, int hi) const {
    if (lo >= hi) return -1;
    // Split on the widest axis of the range.
    Eigen::Vector3d mi = points_[order[lo]], ma = mi;
    for (int i = lo; i < hi; ++i) {
        mi = mi.cwiseMin(points_[order[i]]);
        ma = ma.cwiseMax(points_[order[i]]);
    }
    int axis = 0;
    (ma - mi).maxCoeff(&axis);
    const int mid = (lo + hi) / 2;
    std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi,
                     [&](int a, int b) { return points_[a](axis) < points_[b](axis); });
    Node node;
    node.point = order[mid];
    node.axis = static_cast<std::uint8_t>(axis);
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build_range(order, lo, mid);
    const int right = build_range(order, mid + 1, hi);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

void VoxelMap::rebuild() const {
    nodes_.clear();
    nodes_.reserve(points_.size());
    std::vector<int> order(points_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    root_ = build_range(order, 0, static_cast<int>(order.size()));
    dirty_ = false;
}

void VoxelMap::search(int node, const Eigen::Vector3d& q, int k, std::vector<int>& heap_idx,
                      std::vector<double>& heap_dist) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const Eigen::Vector3d& p = points_[n.point];
    const double d2 = (p - q).squaredNorm();

    if (static_cast<int>(heap_idx.size()) < k) {
        heap_idx.push_back(n.point);
        heap_dist.push_back(d2);
        // Sift up a simple binary max-heap keyed on distance.
        size_t i = heap_idx.size() - 1;
        while (i > 0 && heap_dist[(i - 1) / 2] < heap_dist[i]) {
            std::swap(heap_dist[(i - 1) / 2], heap_dist[i]);
            std::swap(heap_idx[(i - 1) / 2], heap_idx[i]);
            i = (i - 1) / 2;
        }
    } else if (d2 < heap_dist[0]) {
        heap_dist[0] = d2;
        heap_idx[0] = n.point;
        size_t i = 0;
        while (true) {
            size_t largest = i;
            if (2 * i + 1 < heap_dist.size() && heap_dist[2 * i + 1] > heap_dist[largest])
                largest = 2 * i + 1;
            if (2 * i + 2 < heap_dist.size() && heap_dist[2 * i + 2] > heap_dist[largest])
                largest = 2 * i + 2;
            if (largest == i) break;
            std::swap(heap_dist[largest], heap_dist[i]);
            std::swap(heap_idx[largest], heap_idx[i]);
            i = largest;
        }
    }

    const double diff = q(n.axis) - p(n.axis);
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    search(near, q, k, heap_idx, heap_dist);
    const double worst =
        static_cast<int>(heap_idx.size()) < k ? std::numeric_limits<double>::infinity()
                                              : heap_dist[0];
    if (diff * diff < worst) search(far, q, k, heap_idx, heap_dist);
}

void VoxelMap::knn(const Eigen::Vector3d& query, int k, std::vector<int>& indices,
                   std::vector<double>& dist_sq) const {
    if (dirty_) rebuild();
    indices.clear();
    dist_sq.clear();
    if (points_.empty() || k <= 0) return;
    search(root_, query, k, indices, dist_sq);
    // Heap order -> ascending by distance.
    std::vector<size_t> perm(indices.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](size_t a, size_t b) { return dist_sq[a] < dist_sq[b]; });
    std::vector<int> si(indices.size());
    std::vector<double> sd(indices.size());
    for (size_t i = 0; i < perm.size(); ++i) {
        si[i] = indices[perm[i]];
        sd[i] = dist_sq[perm[i]];
    }
    indices = std::move(si);
    dist_sq = std::move(sd);
}

}  // namespace slio
