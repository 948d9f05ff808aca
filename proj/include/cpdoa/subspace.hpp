#pragma once
// Signal/noise eigenstructure of a hermitian covariance estimate.

#include <Eigen/Dense>

#include "cpdoa/array_model.hpp"
#include "cpdoa/common.hpp"

namespace cpdoa {

// Eigenpairs of the covariance split at a known source count.  Eigenvalues
// are sorted descending; the noise power estimate is the mean of the noise
// eigenvalues.
struct SubspaceDecomposition {
    Eigen::MatrixXcd signal_vectors;  // sensors x d
    Eigen::VectorXd signal_values;    // d, descending
    Eigen::MatrixXcd noise_vectors;   // sensors x (sensors - d)
    Eigen::VectorXd noise_values;     // sensors - d, descending
    double noise_power_estimate = 0.0;
    int sensor_count() const { return static_cast<int>(signal_vectors.rows()); }
    int source_count() const { return static_cast<int>(signal_vectors.cols()); }
};

inline SubspaceDecomposition decompose(const CovarianceEstimate& cov, int source_count) {
    const Eigen::Index l = cov.matrix.rows();
    if (cov.matrix.cols() != l)
        throw std::invalid_argument("decompose: covariance matrix must be square");
    if (source_count < 1 || source_count >= l)
        throw std::invalid_argument("decompose: source count must satisfy 1 <= d < sensor count");
    const double scale = cov.matrix.norm();
    if ((cov.matrix - cov.matrix.adjoint()).norm() > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("decompose: covariance matrix is not hermitian");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(cov.matrix);
    if (solver.info() != Eigen::Success)
        throw estimation_error("decompose: eigensolver failed to converge");

    // Eigen returns ascending order; flip to descending.
    const Eigen::Index d = source_count;
    SubspaceDecomposition out;
    out.signal_vectors.resize(l, d);
    out.signal_values.resize(d);
    out.noise_vectors.resize(l, l - d);
    out.noise_values.resize(l - d);
    for (Eigen::Index i = 0; i < l; ++i) {
        const Eigen::Index src = l - 1 - i;
        if (i < d) {
            out.signal_values[i] = solver.eigenvalues()[src];
            out.signal_vectors.col(i) = solver.eigenvectors().col(src);
        } else {
            out.noise_values[i - d] = solver.eigenvalues()[src];
            out.noise_vectors.col(i - d) = solver.eigenvectors().col(src);
        }
    }
    out.noise_power_estimate = out.noise_values.mean();
    return out;
}

}  // namespace cpdoa
