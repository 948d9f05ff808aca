#pragma once
// Benchmarking tools: the stochastic Cramer-Rao bound on electrical angles,
// a grid-search MUSIC baseline and circular mean-squared-error aggregation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cpdoa/array_model.hpp"
#include "cpdoa/common.hpp"
#include "cpdoa/subspace.hpp"

namespace cpdoa {

struct CrbResult {
    std::vector<double> bounds;  // per-source variance lower bound, rad^2
};

// Stochastic (unconditional) bound for jointly Gaussian sources and noise:
//   CRB = (s2 / 2K) { Re[ (D^H P_A_perp D) o (P A^H R^-1 A P)^T ] }^-1
// where D stacks the steering derivatives j * diag(p) * a_d and o is the
// elementwise product.  Diagonal entries are returned in source order.
inline CrbResult stochastic_crb(const CoprimeGeometry& g, const SourceScenario& s, int snapshot_count) {
    validate(s);
    if (!(s.noise_power > 0.0))
        throw std::invalid_argument("stochastic_crb: noise power must be positive");
    if (snapshot_count < 1)
        throw std::invalid_argument("stochastic_crb: snapshot count must be at least 1");
    const int l = g.size();
    const int d = s.source_count();
    if (d >= l) throw std::invalid_argument("stochastic_crb: need fewer sources than sensors");

    Eigen::MatrixXcd a(l, d);
    Eigen::MatrixXcd da(l, d);
    for (int j = 0; j < d; ++j) {
        a.col(j) = steering_vector(g, Subarray::full, s.doas[static_cast<std::size_t>(j)]);
        for (int i = 0; i < l; ++i)
            da(i, j) = cxd(0.0, 1.0) * static_cast<double>(g.positions[static_cast<std::size_t>(i)]) * a(i, j);
    }
    Eigen::VectorXd p(d);
    for (int j = 0; j < d; ++j) p[j] = s.powers[static_cast<std::size_t>(j)];

    const Eigen::MatrixXcd gram = a.adjoint() * a;
    Eigen::FullPivLU<Eigen::MatrixXcd> gram_lu(gram);
    if (!gram_lu.isInvertible())
        throw std::invalid_argument("stochastic_crb: coincident sources collapse the steering matrix");
    const Eigen::MatrixXcd proj_perp =
        Eigen::MatrixXcd::Identity(l, l) - a * gram_lu.solve(a.adjoint());

    const Eigen::MatrixXcd r = a * p.asDiagonal() * a.adjoint() +
                               s.noise_power * Eigen::MatrixXcd::Identity(l, l);
    const Eigen::MatrixXcd r_inv_a = r.llt().solve(a);
    const Eigen::MatrixXcd papr = p.asDiagonal() * (a.adjoint() * r_inv_a) * p.asDiagonal();

    const Eigen::MatrixXd h =
        ((da.adjoint() * proj_perp * da).cwiseProduct(papr.transpose())).real();
    Eigen::FullPivLU<Eigen::MatrixXd> h_lu(h);
    if (!h_lu.isInvertible())
        throw std::invalid_argument("stochastic_crb: singular bound matrix");
    const Eigen::MatrixXd crb = h_lu.inverse() * (s.noise_power / (2.0 * snapshot_count));

    CrbResult out;
    out.bounds.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) out.bounds[static_cast<std::size_t>(j)] = crb(j, j);
    return out;
}

struct SpectrumEstimate {
    std::vector<double> grid;      // psi values, uniform over [-pi, pi)
    std::vector<double> spectrum;  // pseudo-spectrum per grid point
    std::vector<double> peaks;     // d refined peak locations, ascending
};

// Full-array MUSIC evaluated on a uniform grid, with the top d separated
// local maxima refined by parabolic interpolation.  Used as a search-based
// baseline estimator and as an oracle in tests.
inline SpectrumEstimate grid_music(const CovarianceEstimate& cov, const CoprimeGeometry& g,
                                   int source_count, int grid_size) {
    if (cov.matrix.rows() != g.size())
        throw std::invalid_argument("grid_music: covariance does not match geometry");
    if (grid_size < 4 * g.m * g.n)
        throw std::invalid_argument("grid_music: grid must have at least 4 m n points");
    const SubspaceDecomposition dec = decompose(cov, source_count);
    const Eigen::MatrixXcd noise_proj = dec.noise_vectors * dec.noise_vectors.adjoint();

    SpectrumEstimate out;
    out.grid.resize(static_cast<std::size_t>(grid_size));
    out.spectrum.resize(static_cast<std::size_t>(grid_size));
    const double step = two_pi / grid_size;
    for (int i = 0; i < grid_size; ++i) {
        const double psi = -pi + i * step;
        const Eigen::VectorXcd a = steering_vector(g, Subarray::full, psi);
        const double denom = std::max(std::real(cxd(a.adjoint() * noise_proj * a)), 1e-300);
        out.grid[static_cast<std::size_t>(i)] = psi;
        out.spectrum[static_cast<std::size_t>(i)] = 1.0 / denom;
    }

    const double smax = *std::max_element(out.spectrum.begin(), out.spectrum.end());
    const double smin = *std::min_element(out.spectrum.begin(), out.spectrum.end());
    if (!(smax - smin > 1e-9 * smax))
        throw estimation_error("grid_music: flat pseudo-spectrum, no resolvable peaks");

    std::vector<int> maxima;
    for (int i = 0; i < grid_size; ++i) {
        const double prev = out.spectrum[static_cast<std::size_t>((i + grid_size - 1) % grid_size)];
        const double next = out.spectrum[static_cast<std::size_t>((i + 1) % grid_size)];
        const double cur = out.spectrum[static_cast<std::size_t>(i)];
        if (cur > prev && cur > next) maxima.push_back(i);
    }
    std::sort(maxima.begin(), maxima.end(), [&](int i, int j) {
        const double si = out.spectrum[static_cast<std::size_t>(i)];
        const double sj = out.spectrum[static_cast<std::size_t>(j)];
        if (si != sj) return si > sj;
        return i < j;
    });
    std::vector<int> kept;
    for (int i : maxima) {
        bool ok = true;
        for (int j : kept) {
            const int dist = std::abs(i - j);
            if (std::min(dist, grid_size - dist) < 2) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(i);
        if (static_cast<int>(kept.size()) == source_count) break;
    }
    if (static_cast<int>(kept.size()) < source_count)
        throw estimation_error("grid_music: fewer separated spectral peaks than sources");

    for (int i : kept) {
        const double sl = out.spectrum[static_cast<std::size_t>((i + grid_size - 1) % grid_size)];
        const double sr = out.spectrum[static_cast<std::size_t>((i + 1) % grid_size)];
        const double sc = out.spectrum[static_cast<std::size_t>(i)];
        const double curvature = sl - 2.0 * sc + sr;
        double offset = curvature < 0.0 ? 0.5 * (sl - sr) / curvature : 0.0;
        offset = std::clamp(offset, -0.5, 0.5);
        out.peaks.push_back(wrap_to_half_open(out.grid[static_cast<std::size_t>(i)] + offset * step));
    }
    std::sort(out.peaks.begin(), out.peaks.end());
    return out;
}

// Circular per-source errors of one trial against the truth, under the
// assignment minimizing the total squared error (exhaustive up to 8 sources,
// cheapest-first greedy beyond).
inline std::vector<double> matched_errors(const std::vector<double>& estimates,
                                          const std::vector<double>& truth) {
    if (estimates.size() != truth.size() || truth.empty())
        throw std::invalid_argument("matched_errors: estimate and truth lists must be non-empty and equally sized");
    const int d = static_cast<int>(truth.size());
    std::vector<std::vector<double>> err(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d)));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            err[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                wrap_to_pi(estimates[static_cast<std::size_t>(i)] - truth[static_cast<std::size_t>(j)]);

    std::vector<int> assignment(static_cast<std::size_t>(d));
    if (d <= 8) {
        std::vector<int> perm(static_cast<std::size_t>(d));
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (int j = 0; j < d; ++j) {
                const double e = err[static_cast<std::size_t>(j)][static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
                cost += e * e;
            }
            if (cost < best) {
                best = cost;
                assignment = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        struct Entry {
            double cost;
            int j, i;
        };
        std::vector<Entry> entries;
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                const double e = err[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                entries.push_back({e * e, j, i});
            }
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.cost != b.cost) return a.cost < b.cost;
            if (a.j != b.j) return a.j < b.j;
            return a.i < b.i;
        });
        std::vector<bool> row_used(static_cast<std::size_t>(d), false), col_used(static_cast<std::size_t>(d), false);
        for (const Entry& e : entries) {
            if (row_used[static_cast<std::size_t>(e.j)] || col_used[static_cast<std::size_t>(e.i)]) continue;
            row_used[static_cast<std::size_t>(e.j)] = true;
            col_used[static_cast<std::size_t>(e.i)] = true;
            assignment[static_cast<std::size_t>(e.j)] = e.i;
        }
    }

    std::vector<double> out(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
        out[static_cast<std::size_t>(j)] =
            err[static_cast<std::size_t>(j)][static_cast<std::size_t>(assignment[static_cast<std::size_t>(j)])];
    return out;
}

// Per-source mean squared circular error over a set of trials.
inline std::vector<double> mse(const std::vector<std::vector<double>>& trials, const SourceScenario& truth) {
    if (trials.empty()) throw std::invalid_argument("mse: need at least one trial");
    const int d = truth.source_count();
    std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
    for (const std::vector<double>& trial : trials) {
        const std::vector<double> errs = matched_errors(trial, truth.doas);
        for (int j = 0; j < d; ++j) acc[static_cast<std::size_t>(j)] += errs[static_cast<std::size_t>(j)] * errs[static_cast<std::size_t>(j)];
    }
    for (double& v : acc) v /= static_cast<double>(trials.size());
    return acc;
}

}  // namespace cpdoa
