#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace slio {

template <typename Scalar>
inline Eigen::Matrix<Scalar, 3, 3> skew(const Eigen::Matrix<Scalar, 3, 1>& v) {
    Eigen::Matrix<Scalar, 3, 3> s;
    s << Scalar(0), -v.z(), v.y(),
         v.z(), Scalar(0), -v.x(),
        -v.y(), v.x(), Scalar(0);
    return s;
}

/// Exponential map so(3) -> SO(3), Rodrigues formula.
/// Falls back to the second-order Taylor expansion below 1e-8 rad.
template <typename Scalar>
inline Eigen::Matrix<Scalar, 3, 3> so3_exp(const Eigen::Matrix<Scalar, 3, 1>& r) {
    if (!r.allFinite()) {
        throw std::invalid_argument("so3_exp: non-finite rotation vector");
    }
    const Scalar theta = r.norm();
    const Eigen::Matrix<Scalar, 3, 3> k = skew(r);
    if (theta < Scalar(1e-8)) {
        return Eigen::Matrix<Scalar, 3, 3>::Identity() + k + Scalar(0.5) * k * k;
    }
    const Scalar a = std::sin(theta) / theta;
    const Scalar b = (Scalar(1) - std::cos(theta)) / (theta * theta);
    return Eigen::Matrix<Scalar, 3, 3>::Identity() + a * k + b * k * k;
}

template <typename Scalar>
inline bool is_rotation(const Eigen::Matrix<Scalar, 3, 3>& R, Scalar tol) {
    const Scalar ortho = (R * R.transpose() - Eigen::Matrix<Scalar, 3, 3>::Identity())
                             .template lpNorm<Eigen::Infinity>();
    return ortho <= tol && std::abs(R.determinant() - Scalar(1)) <= tol;
}

/// Principal logarithm SO(3) -> so(3), ||result|| <= pi.
/// Uses a Taylor branch near angle 0 and largest-axis extraction near pi.
template <typename Scalar>
inline Eigen::Matrix<Scalar, 3, 1> so3_log(const Eigen::Matrix<Scalar, 3, 3>& R) {
    if (!is_rotation(R, Scalar(1e-6))) {
        throw std::invalid_argument("so3_log: input is not orthonormal with det +1");
    }
    const Scalar cos_theta =
        std::clamp((R.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
    const Scalar theta = std::acos(cos_theta);
    Eigen::Matrix<Scalar, 3, 1> vee(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));

    if (theta < Scalar(1e-6)) {
        // log(R) ~ vee(R - R^T)/2 * (1 + theta^2/6)
        return Scalar(0.5) * vee * (Scalar(1) + theta * theta / Scalar(6));
    }
    const Scalar pi = Scalar(EIGEN_PI);
    if (theta > pi - Scalar(1e-6)) {
        // Near pi, sin(theta) ~ 0: recover the axis from the symmetric part.
        // a a^T = (S - cos(theta) I) / (1 - cos(theta)) with S = (R + R^T)/2.
        const Eigen::Matrix<Scalar, 3, 3> aat =
            ((R + R.transpose()) / Scalar(2) - cos_theta * Eigen::Matrix<Scalar, 3, 3>::Identity()) /
            (Scalar(1) - cos_theta);
        int k = 0;
        aat.diagonal().maxCoeff(&k);
        Eigen::Matrix<Scalar, 3, 1> axis = aat.col(k) / std::sqrt(aat(k, k));
        // Resolve the sign from the skew part when it is not fully degenerate.
        if (vee.dot(axis) < Scalar(0)) axis = -axis;
        return theta * axis;
    }
    return theta / (Scalar(2) * std::sin(theta)) * vee;
}

/// Nearest rotation matrix by polar decomposition (projects drift back
/// onto SO(3) after filter updates).
template <typename Scalar>
inline Eigen::Matrix<Scalar, 3, 3> orthonormalize(const Eigen::Matrix<Scalar, 3, 3>& M) {
    Eigen::JacobiSVD<Eigen::Matrix<Scalar, 3, 3>> svd(
        M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix<Scalar, 3, 3> R = svd.matrixU() * svd.matrixV().transpose();
    if (R.determinant() < Scalar(0)) {
        Eigen::Matrix<Scalar, 3, 3> flip = Eigen::Matrix<Scalar, 3, 3>::Identity();
        flip(2, 2) = Scalar(-1);
        R = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return R;
}

/// Geodesic angle between two rotations, in radians. Uses atan2 of the
/// skew/symmetric parts, which stays accurate for tiny angles where acos
/// saturates.
template <typename Scalar>
inline Scalar rotation_angle_between(const Eigen::Matrix<Scalar, 3, 3>& Ra,
                                     const Eigen::Matrix<Scalar, 3, 3>& Rb) {
    const Eigen::Matrix<Scalar, 3, 3> r = Ra.transpose() * Rb;
    const Eigen::Matrix<Scalar, 3, 1> vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0),
                                          r(1, 0) - r(0, 1));
    const Scalar s = vee.norm() / Scalar(2);
    const Scalar c = (r.trace() - Scalar(1)) / Scalar(2);
    return std::atan2(s, c);
}

}  // namespace slio
