#pragma once
// Search-free per-subarray angle estimation: a weighted subspace fit of a
// conjugate-symmetric polynomial whose unit-circle roots carry the angles,
// followed by folding of the rooted angles into the subarray's unambiguous
// interval.
//
// The fit minimizes tr{P_B E_s W E_s^H} over the polynomial coefficients b,
// where B^H is the banded convolution matrix of b, P_B the orthogonal
// projector onto its column space and W = (L_s - s2 I)^2 L_s^{-1} the
// signal-eigenvalue weighting.  The minimization runs as a sequence of
// quadratic problems: the first pass drops the (B^H B)^{-1} factor, later
// passes prewhiten the rows by (B^H B)^{-1/2} of the previous iterate.  Under
// the conjugate-symmetry constraint the unit-norm minimizer is the smallest
// eigenvector of a real symmetric normal-equation form.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "cpdoa/array_model.hpp"
#include "cpdoa/common.hpp"
#include "cpdoa/subspace.hpp"

namespace cpdoa {

// Coefficients b_0..b_D of the root polynomial, unit norm, exactly conjugate
// symmetric (b_k == conj(b_{D-k})) with the residual sign chosen so that
// Re(b_0) > 0, ties broken by Im(b_0) >= 0.
struct ModeCoefficients {
    Eigen::VectorXcd b;
    int degree() const { return static_cast<int>(b.size()) - 1; }
};

namespace detail {

// Real parameterization of the conjugate-symmetric coefficient space:
// b = J * theta maps theta in R^{d+1} isometrically onto the constraint set.
inline Eigen::MatrixXcd conj_symmetric_basis(int degree) {
    const int d = degree;
    Eigen::MatrixXcd jmat = Eigen::MatrixXcd::Zero(d + 1, d + 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int k = 0; 2 * k < d; ++k) {
        jmat(k, 2 * k) = inv_sqrt2;
        jmat(d - k, 2 * k) = inv_sqrt2;
        jmat(k, 2 * k + 1) = cxd(0.0, inv_sqrt2);
        jmat(d - k, 2 * k + 1) = cxd(0.0, -inv_sqrt2);
    }
    if (d % 2 == 0) jmat(d / 2, d) = 1.0;
    return jmat;
}

// Same map evaluated directly so the conjugate symmetry of the result is
// exact at the bit level.
inline Eigen::VectorXcd coefficients_from_parameters(const Eigen::VectorXd& theta) {
    const int d = static_cast<int>(theta.size()) - 1;
    Eigen::VectorXcd b(d + 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int k = 0; 2 * k < d; ++k) {
        const double re = theta[2 * k] * inv_sqrt2;
        const double im = theta[2 * k + 1] * inv_sqrt2;
        b[k] = cxd(re, im);
        b[d - k] = cxd(re, -im);
    }
    if (d % 2 == 0) b[d / 2] = cxd(theta[d], 0.0);
    return b;
}

inline void canonicalize_sign(Eigen::VectorXcd& b) {
    const cxd lead = b[0];
    if (lead.real() < 0.0 || (lead.real() == 0.0 && lead.imag() < 0.0)) b = -b;
}

// B^H as a dense banded matrix: row i holds b_D .. b_0 starting at column i.
inline Eigen::MatrixXcd annihilator_transpose(const Eigen::VectorXcd& b, int sensors) {
    const int d = static_cast<int>(b.size()) - 1;
    const int rows = sensors - d;
    Eigen::MatrixXcd bh = Eigen::MatrixXcd::Zero(rows, sensors);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k <= d; ++k) bh(i, i + k) = b[d - k];
    return bh;
}

inline Eigen::MatrixXcd inverse_sqrt(const Eigen::MatrixXcd& gram) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    if (es.info() != Eigen::Success)
        throw estimation_error("mode_fit: whitening eigensolver failed to converge");
    const double floor_val = std::max(es.eigenvalues().maxCoeff(), 0.0) * 1e-12 + 1e-300;
    const Eigen::VectorXd inv = es.eigenvalues().cwiseMax(floor_val).cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

// Eigenvalues of the companion matrix of the monic form of b.  The caller
// guarantees a nonzero leading coefficient.
inline Eigen::VectorXcd polynomial_roots(const Eigen::VectorXcd& b) {
    const int d = static_cast<int>(b.size()) - 1;
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i + 1 < d; ++i) companion(i + 1, i) = 1.0;
    for (int i = 0; i < d; ++i) companion(i, d - 1) = -b[d - i] / b[0];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
    if (es.info() != Eigen::Success)
        throw estimation_error("polynomial_roots: companion eigensolver failed to converge");
    return es.eigenvalues();
}

}  // namespace detail

inline ModeCoefficients mode_fit(const SubspaceDecomposition& sub, int source_count, int iterations = 2) {
    if (source_count != sub.source_count())
        throw std::invalid_argument("mode_fit: source count does not match the decomposition");
    if (iterations < 1)
        throw std::invalid_argument("mode_fit: need at least one iteration");
    const int l = sub.sensor_count();
    const int d = source_count;

    const Eigen::VectorXd& lam = sub.signal_values;
    const double sigma2 = sub.noise_power_estimate;
    if (!(lam.minCoeff() > 0.0) || lam[0] - sigma2 <= 1e-14 * std::max(lam[0], sigma2))
        throw estimation_error("mode_fit: subspace collapse, no signal eigenvalue above the noise floor");

    Eigen::MatrixXcd v(l, d);
    for (int c = 0; c < d; ++c) {
        const double w = (lam[c] - sigma2) * (lam[c] - sigma2) / lam[c];
        v.col(c) = sub.signal_vectors.col(c) * std::sqrt(w);
    }

    // S_c(i, t) = V(i + d - t, c), so that stacking the S_c blocks gives
    // vec(B^H V) = G b.
    const int rows = l - d;
    std::vector<Eigen::MatrixXcd> design(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
        Eigen::MatrixXcd s(rows, d + 1);
        for (int i = 0; i < rows; ++i)
            for (int t = 0; t <= d; ++t) s(i, t) = v(i + d - t, c);
        design[static_cast<std::size_t>(c)] = std::move(s);
    }

    const Eigen::MatrixXcd jmat = detail::conj_symmetric_basis(d);
    Eigen::VectorXcd b;
    for (int iter = 0; iter < iterations; ++iter) {
        Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(d + 1, d + 1);
        if (iter == 0) {
            for (const Eigen::MatrixXcd& s : design) q += s.adjoint() * s;
        } else {
            const Eigen::MatrixXcd bh = detail::annihilator_transpose(b, l);
            const Eigen::MatrixXcd white = detail::inverse_sqrt(bh * bh.adjoint());
            for (const Eigen::MatrixXcd& s : design) {
                const Eigen::MatrixXcd ws = white * s;
                q += ws.adjoint() * ws;
            }
        }
        const Eigen::MatrixXd normal = (jmat.adjoint() * q * jmat).real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal);
        if (es.info() != Eigen::Success)
            throw estimation_error("mode_fit: normal-equation eigensolver failed to converge");
        b = detail::coefficients_from_parameters(es.eigenvectors().col(0));
        detail::canonicalize_sign(b);
    }

    ModeCoefficients out;
    out.b = std::move(b);
    return out;
}

// Angles of the polynomial roots, computed from the eigenvalues of the
// companion matrix of the monic form.  Returned sorted ascending in [-pi, pi).
inline std::vector<double> roots_to_angles(const ModeCoefficients& coeffs) {
    const int d = coeffs.degree();
    if (d < 1) throw std::invalid_argument("roots_to_angles: polynomial degree must be at least 1");
    const double scale = coeffs.b.norm();
    if (!(scale > 0.0) || std::abs(coeffs.b[0]) <= 1e-12 * scale)
        throw estimation_error("roots_to_angles: degree-deficient polynomial, leading coefficient is numerically zero");

    const Eigen::VectorXcd roots = detail::polynomial_roots(coeffs.b);
    std::vector<double> angles(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        double a = std::arg(roots[i]);
        if (a >= pi) a = -pi;
        angles[static_cast<std::size_t>(i)] = a;
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

// Representative of an aliased angle.  A subarray with physical step
// `spacing` sees the unit-spaced angle phi = spacing * psi (mod 2pi), so the
// electrical angle is only determined up to 2pi/spacing; the representative
// is the unique solution in [-pi, -pi + 2pi/spacing).
inline double fold_to_fundamental(double angle, int spacing) {
    if (spacing < 1) throw std::invalid_argument("fold_to_fundamental: spacing must be positive");
    const double period = two_pi / spacing;
    double r = -pi + positive_mod(angle / spacing + pi, period);
    if (r >= -pi + period) r -= period;
    return r;
}

// Folded per-subarray estimates: ambiguous residues sorted ascending, each in
// [-pi, -pi + 2pi/spacing).
struct FoldedEstimate {
    int spacing = 0;
    std::vector<double> reps;
};

inline FoldedEstimate estimate_subarray(const SnapshotSet& snaps, const CoprimeGeometry& g,
                                        Subarray which, int source_count, int iterations = 2) {
    if (which == Subarray::full)
        throw std::invalid_argument("estimate_subarray: pick one of the two uniform subarrays");
    const SnapshotSet sub = subarray_snapshots(snaps, g, which);
    const CovarianceEstimate cov = sample_covariance(sub);
    const SubspaceDecomposition dec = decompose(cov, source_count);
    const ModeCoefficients coeffs = mode_fit(dec, source_count, iterations);
    const std::vector<double> angles = roots_to_angles(coeffs);

    FoldedEstimate out;
    out.spacing = subarray_step(g, which);
    out.reps.reserve(angles.size());
    for (double a : angles) out.reps.push_back(fold_to_fundamental(a, out.spacing));
    std::sort(out.reps.begin(), out.reps.end());
    return out;
}

}  // namespace cpdoa
