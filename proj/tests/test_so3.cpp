#include <doctest.h>

#include <Eigen/Dense>

#include "slio/rng.hpp"
#include "slio/so3.hpp"

using namespace slio;

TEST_CASE("exp of zero is identity") {
    const Eigen::Matrix3d r = so3_exp<double>(Eigen::Vector3d::Zero());
    CHECK((r - Eigen::Matrix3d::Identity()).norm() == 0.0);
}

TEST_CASE("exp of pi/2 about x maps +y to +z") {
    const Eigen::Matrix3d r = so3_exp<double>(Eigen::Vector3d(EIGEN_PI / 2.0, 0.0, 0.0));
    const Eigen::Vector3d mapped = r * Eigen::Vector3d::UnitY();
    CHECK((mapped - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
}

TEST_CASE("tiny angles match the Taylor branch") {
    const Eigen::Vector3d r(1e-10, -2e-10, 0.5e-10);
    const Eigen::Matrix3d taylor =
        Eigen::Matrix3d::Identity() + skew<double>(r) + 0.5 * skew<double>(r) * skew<double>(r);
    CHECK((so3_exp<double>(r) - taylor).norm() < 1e-15);
}

TEST_CASE("non-finite input throws") {
    Eigen::Vector3d bad(std::nan(""), 0.0, 0.0);
    CHECK_THROWS_AS(so3_exp<double>(bad), std::invalid_argument);
}

TEST_CASE("log of identity is zero") {
    CHECK(so3_log<double>(Eigen::Matrix3d::Identity()).norm() == 0.0);
}

TEST_CASE("log of a non-rotation throws") {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = 1.5;
    CHECK_THROWS_AS(so3_log<double>(m), std::invalid_argument);
}

TEST_CASE("exp/log roundtrip") {
    const Eigen::Vector3d r(0.3, -0.2, 0.1);
    CHECK((so3_log<double>(so3_exp<double>(r)) - r).norm() < 1e-12);
}

TEST_CASE("near-pi branch recovers the axis") {
    const Eigen::Matrix3d r = so3_exp<double>(Eigen::Vector3d(EIGEN_PI, 0.0, 0.0));
    const Eigen::Vector3d back = so3_log<double>(r);
    CHECK(std::abs(back.norm() - EIGEN_PI) < 1e-9);
    CHECK(std::abs(std::abs(back.x()) - EIGEN_PI) < 1e-9);

    // Slightly off pi, both signs must still roundtrip.
    for (double angle : {EIGEN_PI - 1e-7, EIGEN_PI - 1e-3}) {
        const Eigen::Vector3d axis = Eigen::Vector3d(1.0, -2.0, 0.5).normalized();
        const Eigen::Vector3d v = angle * axis;
        const Eigen::Vector3d rec = so3_log<double>(so3_exp<double>(v));
        CHECK((rec - v).norm() < 1e-6);
    }
}

TEST_CASE("1000 random roundtrips stay within 1e-9 and orthonormal within 1e-12") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
        axis.normalize();
        const double angle = rng.uniform(0.0, EIGEN_PI - 1e-6);
        const Eigen::Vector3d r = angle * axis;
        const Eigen::Matrix3d m = so3_exp<double>(r);
        CHECK((m * m.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
        CHECK(std::abs(m.determinant() - 1.0) < 1e-12);
        CHECK((so3_log<double>(m) - r).norm() < 1e-9);
    }
}

TEST_CASE("orthonormalize projects a perturbed matrix back onto SO(3)") {
    Rng rng(3);
    Eigen::Matrix3d r = so3_exp<double>(Eigen::Vector3d(0.4, 0.3, -0.7));
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) += 1e-4 * rng.normal();
    const Eigen::Matrix3d fixed = orthonormalize(r);
    CHECK((fixed * fixed.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(fixed.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((fixed - r).norm() < 1e-3);
}

TEST_CASE("rotation_angle_between") {
    const Eigen::Matrix3d a = so3_exp<double>(Eigen::Vector3d(0.0, 0.0, 0.2));
    const Eigen::Matrix3d b = so3_exp<double>(Eigen::Vector3d(0.0, 0.0, -0.3));
    CHECK(rotation_angle_between(a, b) == doctest::Approx(0.5).epsilon(1e-9));
}
