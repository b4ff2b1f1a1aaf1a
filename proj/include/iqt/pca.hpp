#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "iqt/error.hpp"

namespace iqt {

struct PcaProjection {
    Eigen::MatrixXd basis;  ///< reduced_dim x raw_dim, orthonormal rows
    Eigen::VectorXd mean;   ///< raw_dim
    /// Fraction of variance retained. NaN when unknown (e.g. loaded from disk).
    double explained_variance_ratio = std::numeric_limits<double>::quiet_NaN();

    Eigen::Index raw_dim() const { return basis.cols(); }
    Eigen::Index reduced_dim() const { return basis.rows(); }

    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return basis * (x - mean); }
    Eigen::MatrixXd project_columns(const Eigen::MatrixXd& X) const {
        return basis * (X.colwise() - mean);
    }
    Eigen::VectorXd reconstruct(const Eigen::VectorXd& p) const { return basis.transpose() * p + mean; }
};

/// Principal subspace of the columns of `samples` (raw_dim x N) keeping the
/// smallest number of components whose cumulative variance fraction reaches
/// `min_variance`. With `center == false` the decomposition is taken about
/// the origin (second moments), and the stored mean is zero.
inline PcaProjection fit_pca(const Eigen::MatrixXd& samples, double min_variance = 0.9, bool center = true) {
    if (samples.cols() < 2) throw ParameterError("PCA needs at least 2 samples");
    if (!(min_variance > 0.0 && min_variance <= 1.0)) throw ParameterError("min_variance must lie in (0, 1]");
    const Eigen::Index d = samples.rows();
    const Eigen::Index N = samples.cols();

    PcaProjection out;
    out.mean = center ? Eigen::VectorXd(samples.rowwise().mean()) : Eigen::VectorXd::Zero(d);
    const Eigen::MatrixXd X = samples.colwise() - out.mean;

    Eigen::VectorXd eigval;
    Eigen::MatrixXd eigvec; // columns, raw space
    if (d <= N) {
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        cov.selfadjointView<Eigen::Lower>().rankUpdate(X);
        cov = cov.selfadjointView<Eigen::Lower>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        eigval = es.eigenvalues().reverse();
        eigvec = es.eigenvectors().rowwise().reverse();
    } else {
        // Gram route: eigenvectors of X^T X mapped back through X.
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(N, N);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
        gram = gram.selfadjointView<Eigen::Lower>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        eigval = es.eigenvalues().reverse();
        const Eigen::MatrixXd v = es.eigenvectors().rowwise().reverse();
        eigvec = X * v;
        for (Eigen::Index c = 0; c < eigvec.cols(); ++c) {
            const double nrm = eigvec.col(c).norm();
            if (nrm > 0.0) eigvec.col(c) /= nrm;
        }
    }
    eigval = eigval.cwiseMax(0.0);
    const double total = eigval.sum();
    const double scale_ref = std::max(1.0, X.cwiseAbs().maxCoeff());
    if (!(total > 1e-24 * scale_ref * scale_ref * static_cast<double>(d))) {
        out.basis = Eigen::MatrixXd::Zero(1, d);
        out.basis(0, 0) = 1.0;
        out.explained_variance_ratio = 1.0;
        return out;
    }
    Eigen::Index keep = 0;
    double cum = 0.0;
    while (keep < eigval.size()) {
        cum += eigval(keep);
        ++keep;
        if (cum / total >= min_variance - 1e-12) break;
    }
    Eigen::MatrixXd basis = eigvec.leftCols(keep).transpose();
    // Re-orthonormalise (matters for the Gram route).
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis.transpose());
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, keep);
    for (Eigen::Index c = 0; c < keep; ++c) {
        if (q.col(c).dot(basis.row(c).transpose()) < 0.0) q.col(c) = -q.col(c);
    }
    out.basis = q.transpose();
    out.explained_variance_ratio = std::min(1.0, cum / total);
    return out;
}

/// Fraction of the (centred, by the projection's mean) energy of `samples`
/// captured by the projection. Recovers the ratio for dictionaries loaded from
/// disk, given the data they were fitted on.
inline double explained_variance(const PcaProjection& pca, const Eigen::MatrixXd& samples) {
    const Eigen::MatrixXd centred = samples.colwise() - pca.mean;
    const double total = centred.squaredNorm();
    if (!(total > 0.0)) return 1.0;
    return (pca.basis * centred).squaredNorm() / total;
}

} // namespace iqt
