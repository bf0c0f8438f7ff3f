#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <stdexcept>

namespace slio {

template <typename Scalar>
struct RigidFit {
    Eigen::Matrix<Scalar, 3, 3> rot = Eigen::Matrix<Scalar, 3, 3>::Identity();
    Eigen::Matrix<Scalar, 3, 1> pos = Eigen::Matrix<Scalar, 3, 1>::Zero();
    Scalar rms = Scalar(0);

    Eigen::Matrix<Scalar, 3, 1> apply(const Eigen::Matrix<Scalar, 3, 1>& p) const {
        return rot * p + pos;
    }
};

/// Singular values (descending) of the scatter matrix
/// H = sum_k (p_k - c)(p_k - c)^T over the columns of `pts`, c the centroid.
/// H is symmetric PSD, so these equal its eigenvalues.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 1> scatter_singular_values(
    const Eigen::MatrixBase<Derived>& pts) {
    using Scalar = typename Derived::Scalar;
    static_assert(Derived::RowsAtCompileTime == 3 || Derived::RowsAtCompileTime == Eigen::Dynamic);
    if (pts.rows() != 3 || pts.cols() < 1) {
        throw std::invalid_argument("scatter_singular_values: expected 3xN points, N >= 1");
    }
    const Eigen::Matrix<Scalar, 3, 1> c = pts.rowwise().mean();
    const Eigen::Matrix<Scalar, 3, Eigen::Dynamic> d = pts.colwise() - c;
    const Eigen::Matrix<Scalar, 3, 3> h = d * d.transpose();
    Eigen::JacobiSVD<Eigen::Matrix<Scalar, 3, 3>> svd(h);
    return svd.singularValues();
}

/// Closed-form rigid fit minimizing sum_k ||a_k - (R b_k + t)||^2
/// (centroid subtraction + SVD of the cross-covariance, determinant-corrected).
/// Columns of `a` and `b` are corresponding points; rms is the post-fit RMS.
template <typename DerivedA, typename DerivedB>
RigidFit<typename DerivedA::Scalar> fit_rigid(const Eigen::MatrixBase<DerivedA>& a,
                                              const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    if (a.rows() != 3 || b.rows() != 3 || a.cols() != b.cols()) {
        throw std::invalid_argument("fit_rigid: expected matching 3xN point sets");
    }
    if (a.cols() < 3) {
        throw std::invalid_argument("fit_rigid: need at least 3 point pairs");
    }
    const Eigen::Matrix<Scalar, 3, 1> ca = a.rowwise().mean();
    const Eigen::Matrix<Scalar, 3, 1> cb = b.rowwise().mean();
    const Eigen::Matrix<Scalar, 3, Eigen::Dynamic> da = a.colwise() - ca;
    const Eigen::Matrix<Scalar, 3, Eigen::Dynamic> db = b.colwise() - cb;

    const Eigen::Matrix<Scalar, 3, 3> w = da * db.transpose();
    Eigen::JacobiSVD<Eigen::Matrix<Scalar, 3, 3>> svd(
        w, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix<Scalar, 3, 3> s = Eigen::Matrix<Scalar, 3, 3>::Identity();
    s(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < Scalar(0)
                  ? Scalar(-1)
                  : Scalar(1);

    RigidFit<Scalar> fit;
    fit.rot = svd.matrixU() * s * svd.matrixV().transpose();
    fit.pos = ca - fit.rot * cb;
    fit.rms = std::sqrt((a - ((fit.rot * b).colwise() + fit.pos)).colwise().squaredNorm().mean());
    return fit;
}

}  // namespace slio
