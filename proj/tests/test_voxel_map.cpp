#include <doctest.h>

#include <algorithm>

#include "slio/rng.hpp"
#include "slio/voxel_map.hpp"

using namespace slio;

TEST_CASE("voxel downsample keeps one point per leaf") {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 100; ++i) pts.emplace_back(0.001 * i, 0.0, 0.0);
    const auto down = voxel_downsample(pts, 0.2);
    CHECK(down.size() == 1);
}

TEST_CASE("inserting the same scan twice grows the map at most once") {
    VoxelMap map(0.2);
    Rng rng(1);
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 500; ++i) {
        pts.emplace_back(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(0.0, 2.0));
    }
    const int added_first = map.insert(pts);
    CHECK(added_first > 0);
    const size_t size_after_first = map.size();
    const int added_second = map.insert(pts);
    CHECK(added_second == 0);
    CHECK(map.size() == size_after_first);
}

TEST_CASE("an inserted point is among its own 5 nearest neighbors") {
    VoxelMap map(0.2);
    Rng rng(2);
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 300; ++i) {
        pts.emplace_back(rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0), rng.uniform(0.0, 3.0));
    }
    map.insert(pts);
    std::vector<int> idx;
    std::vector<double> d2;
    map.knn(map.point(42), 5, idx, d2);
    REQUIRE(idx.size() == 5);
    CHECK(idx[0] == 42);
    CHECK(d2[0] == 0.0);
}

TEST_CASE("knn matches brute force on random queries") {
    VoxelMap map(0.05);
    Rng rng(3);
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 800; ++i) {
        pts.emplace_back(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
    }
    map.insert(pts);
    for (int q = 0; q < 50; ++q) {
        const Eigen::Vector3d query(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                                    rng.uniform(-3.0, 3.0));
        std::vector<int> idx;
        std::vector<double> d2;
        map.knn(query, 5, idx, d2);
        REQUIRE(idx.size() == 5);

        std::vector<double> all;
        for (size_t i = 0; i < map.size(); ++i) {
            all.push_back((map.point(static_cast<int>(i)) - query).squaredNorm());
        }
        std::sort(all.begin(), all.end());
        for (int k = 0; k < 5; ++k) CHECK(d2[k] == doctest::Approx(all[k]).epsilon(1e-12));
    }
}

TEST_CASE("map size is bounded by surface area over leaf^2") {
    // 10x10 m plane sampled repeatedly: occupancy can never exceed the
    // number of voxel columns the surface intersects.
    VoxelMap map(0.2);
    Rng rng(4);
    for (int scan = 0; scan < 100; ++scan) {
        std::vector<Eigen::Vector3d> pts;
        for (int i = 0; i < 1000; ++i) {
            pts.emplace_back(rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0),
                             0.02 * rng.normal());
        }
        map.insert(pts);
    }
    const double bound = (10.0 / 0.2 + 1) * (10.0 / 0.2 + 1) * 3;  // a few z-layers
    CHECK(static_cast<double>(map.size()) < bound);
}
