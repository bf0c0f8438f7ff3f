#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>

#include "slio/clustering.hpp"
#include "slio/rng.hpp"

using namespace slio;

namespace {

// Brute-force O(n^2) connected components: the oracle euclidean_cluster must
// match exactly.
std::vector<std::vector<int>> brute_force_components(const std::vector<Eigen::Vector3d>& pts,
                                                     double tol, int min_pts, int max_pts) {
    const double tol2 = tol * tol;
    std::vector<int> parent(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (size_t i = 0; i < pts.size(); ++i) {
        for (size_t j = i + 1; j < pts.size(); ++j) {
            if ((pts[i] - pts[j]).squaredNorm() <= tol2) {
                parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
            }
        }
    }
    std::map<int, std::vector<int>> groups;
    for (size_t i = 0; i < pts.size(); ++i) groups[find(static_cast<int>(i))].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [root, members] : groups) {
        const int n = static_cast<int>(members.size());
        if (n < min_pts || n > max_pts) continue;
        std::sort(members.begin(), members.end());
        out.push_back(members);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<int>> member_sets(const std::vector<Cluster>& clusters) {
    std::vector<std::vector<int>> out;
    for (const auto& c : clusters) out.push_back(c.members);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("reflectivity filter keeps strictly-above-threshold points in order") {
    LidarScan scan;
    for (int i = 0; i < 10; ++i) {
        LidarPoint p;
        p.pos_body = Eigen::Vector3d(i, 0, 0);
        p.reflectivity = static_cast<std::uint8_t>(i * 25);
        scan.points.push_back(p);
    }
    const auto all = reflectivity_filter(scan, 0);
    CHECK(all.size() == 9);  // reflectivity 0 is not strictly above 0
    const auto none = reflectivity_filter(scan, 255);
    CHECK(none.empty());
    const auto some = reflectivity_filter(scan, 200);
    REQUIRE(some.size() == 1);
    CHECK(some[0].reflectivity == 225);
}

TEST_CASE("two groups far apart become two clusters with correct centroids") {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 5; ++i) pts.emplace_back(0.1 * i, 0.0, 0.0);
    for (int i = 0; i < 7; ++i) pts.emplace_back(5.0 + 0.1 * i, 0.0, 0.0);
    const auto clusters = euclidean_cluster(std::span<const Eigen::Vector3d>(pts), 0.5, 1, 1000);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0].point_count == 5);
    CHECK(clusters[0].centroid.x() == doctest::Approx(0.2));
    CHECK(clusters[1].point_count == 7);
    CHECK(clusters[1].centroid.x() == doctest::Approx(5.3));
}

TEST_CASE("single point below min_pts gives no clusters") {
    std::vector<Eigen::Vector3d> pts{{0, 0, 0}};
    CHECK(euclidean_cluster(std::span<const Eigen::Vector3d>(pts), 0.5, 3, 1000).empty());
}

TEST_CASE("a dense line forms one cluster") {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 200; ++i) pts.emplace_back(0.05 * i, 0.0, 0.0);
    const auto clusters = euclidean_cluster(std::span<const Eigen::Vector3d>(pts), 0.2, 1, 1000);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].point_count == 200);
}

TEST_CASE("matches brute-force connected components on 200 random sets") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(500));
        std::vector<Eigen::Vector3d> pts;
        pts.reserve(n);
        // Mix of clumps and scatter so both branches get exercised.
        const int clumps = 1 + static_cast<int>(rng.uniform_index(6));
        for (int i = 0; i < n; ++i) {
            const int c = static_cast<int>(rng.uniform_index(clumps));
            const Eigen::Vector3d center(2.0 * c, 1.5 * (c % 2), 0.0);
            pts.push_back(center + Eigen::Vector3d(rng.normal(0.3), rng.normal(0.3),
                                                   rng.normal(0.3)));
        }
        const double tol = rng.uniform(0.05, 0.6);
        const int min_pts = 1 + static_cast<int>(rng.uniform_index(4));
        const int max_pts = 50 + static_cast<int>(rng.uniform_index(500));
        const auto expected = brute_force_components(pts, tol, min_pts, max_pts);
        const auto got = member_sets(
            euclidean_cluster(std::span<const Eigen::Vector3d>(pts), tol, min_pts, max_pts));
        REQUIRE(got == expected);
    }
}

TEST_CASE("size-based rejection") {
    Cluster wall;
    wall.extent = Eigen::Vector3d(4.0, 3.0, 0.1);
    Cluster drone;
    drone.extent = Eigen::Vector3d(0.3, 0.3, 0.15);
    Cluster speck;
    speck.extent = Eigen::Vector3d::Zero();
    const Eigen::Vector3d lo = Eigen::Vector3d::Constant(0.05);
    const Eigen::Vector3d hi = Eigen::Vector3d::Constant(0.8);
    const auto kept = reject_invalid({wall, drone, speck}, lo, hi);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].extent == drone.extent);
}

TEST_CASE("radius query touches only points in nearby cells") {
    Rng rng(7);
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 2000; ++i) {
        pts.emplace_back(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0),
                         rng.uniform(-2.0, 2.0));
    }
    const VoxelIndex index(pts, 0.3);
    int touched = 0;
    const Eigen::Vector3d center(0.0, 0.0, 0.0);
    const auto inside = index.radius_query(center, 0.8, &touched);
    // Everything returned is within the radius.
    for (int idx : inside) CHECK((pts[idx] - center).norm() <= 0.8);
    // The scan stayed local: candidates live in cells overlapping the ball,
    // i.e. within radius + one cell diagonal.
    int within_inflated = 0;
    const double inflated = 0.8 + 0.3 * std::sqrt(3.0) + 1e-9;
    for (const auto& p : pts) {
        if ((p - center).norm() <= inflated) ++within_inflated;
    }
    CHECK(touched <= within_inflated);
    CHECK(touched < static_cast<int>(pts.size()) / 4);
}
