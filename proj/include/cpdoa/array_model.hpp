#pragma once
// Coprime array geometry, steering vectors, snapshot synthesis and sample
// covariance estimation.

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

#include "cpdoa/common.hpp"

namespace cpdoa {

enum class Subarray { full, first, second };

// Sensor positions in half-wavelength units.  Subarray one is the n sensors
// at multiples of m, subarray two the m sensors at multiples of n; the origin
// sensor is shared, so the full array has m + n - 1 elements.
struct CoprimeGeometry {
    int m = 0;
    int n = 0;
    std::vector<int> positions;  // [0, m, 2m, ..., (n-1)m, n, 2n, ..., (m-1)n]
    std::vector<int> subarray1;  // indices into positions, n entries, step m
    std::vector<int> subarray2;  // indices into positions, m entries, step n
    int size() const { return static_cast<int>(positions.size()); }
};

inline CoprimeGeometry make_geometry(int m, int n) {
    if (m < 2 || n < 2 || m == n)
        throw std::invalid_argument("make_geometry: degenerate geometry, need distinct m, n >= 2");
    if (std::gcd(m, n) != 1)
        throw std::invalid_argument("make_geometry: m and n must be coprime");
    CoprimeGeometry g;
    g.m = m;
    g.n = n;
    g.positions.reserve(static_cast<std::size_t>(m + n - 1));
    for (int i = 0; i < n; ++i) g.positions.push_back(i * m);
    for (int j = 1; j < m; ++j) g.positions.push_back(j * n);
    g.subarray1.resize(static_cast<std::size_t>(n));
    std::iota(g.subarray1.begin(), g.subarray1.end(), 0);
    g.subarray2.resize(static_cast<std::size_t>(m));
    g.subarray2[0] = 0;
    for (int j = 1; j < m; ++j) g.subarray2[static_cast<std::size_t>(j)] = n - 1 + j;
    return g;
}

inline std::vector<int> subarray_indices(const CoprimeGeometry& g, Subarray which) {
    switch (which) {
        case Subarray::first: return g.subarray1;
        case Subarray::second: return g.subarray2;
        default: {
            std::vector<int> all(static_cast<std::size_t>(g.size()));
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
    }
}

inline std::vector<int> subarray_positions(const CoprimeGeometry& g, Subarray which) {
    std::vector<int> pos;
    for (int i : subarray_indices(g, which)) pos.push_back(g.positions[static_cast<std::size_t>(i)]);
    return pos;
}

// Uniform step of one subarray in half-wavelength units.
inline int subarray_step(const CoprimeGeometry& g, Subarray which) {
    if (which == Subarray::first) return g.m;
    if (which == Subarray::second) return g.n;
    throw std::invalid_argument("subarray_step: the full array is not uniform");
}

// Array response for an electrical angle psi: element exp(j * p * psi) per
// sensor position p.
inline Eigen::VectorXcd steering_vector(const CoprimeGeometry& g, Subarray which, double psi) {
    const std::vector<int> pos = subarray_positions(g, which);
    Eigen::VectorXcd a(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const double phase = pos[i] * psi;
        a[static_cast<Eigen::Index>(i)] = cxd(std::cos(phase), std::sin(phase));
    }
    return a;
}

// Far-field narrowband sources: electrical angles in [-pi, pi), per-source
// powers and the common sensor noise power.
struct SourceScenario {
    std::vector<double> doas;
    std::vector<double> powers;
    double noise_power = 0.0;
    int source_count() const { return static_cast<int>(doas.size()); }
};

inline void validate(const SourceScenario& s) {
    if (s.doas.empty() || s.doas.size() != s.powers.size())
        throw std::invalid_argument("SourceScenario: doas and powers must be non-empty and equally sized");
    for (double p : s.powers)
        if (!(p > 0.0)) throw std::invalid_argument("SourceScenario: source powers must be positive");
    if (!(s.noise_power >= 0.0))
        throw std::invalid_argument("SourceScenario: noise power must be non-negative");
    for (double psi : s.doas)
        if (!(psi >= -pi && psi < pi))
            throw std::invalid_argument("SourceScenario: doas must lie in [-pi, pi)");
}

struct SnapshotSet {
    Eigen::MatrixXcd data;  // sensors x snapshots
    int sensor_count() const { return static_cast<int>(data.rows()); }
    int snapshot_count() const { return static_cast<int>(data.cols()); }
};

// y(k) = A x(k) + w(k) with circular complex Gaussian sources and noise.
// Per snapshot the source amplitudes are drawn first, then the noise, so a
// given seed pins the entire realization.
inline SnapshotSet synthesize_snapshots(const CoprimeGeometry& g, const SourceScenario& s,
                                        int snapshot_count, std::uint64_t seed) {
    validate(s);
    if (snapshot_count < 0)
        throw std::invalid_argument("synthesize_snapshots: snapshot count must be non-negative");
    const int l = g.size();
    const int d = s.source_count();
    Eigen::MatrixXcd a(l, d);
    for (int j = 0; j < d; ++j) a.col(j) = steering_vector(g, Subarray::full, s.doas[j]);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit;
    std::vector<double> sig_scale(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) sig_scale[static_cast<std::size_t>(j)] = std::sqrt(s.powers[static_cast<std::size_t>(j)] / 2.0);
    const double noise_scale = std::sqrt(s.noise_power / 2.0);
    SnapshotSet out;
    out.data.resize(l, snapshot_count);
    Eigen::VectorXcd x(d);
    for (int k = 0; k < snapshot_count; ++k) {
        for (int j = 0; j < d; ++j) {
            const double re = unit(rng) * sig_scale[static_cast<std::size_t>(j)];
            const double im = unit(rng) * sig_scale[static_cast<std::size_t>(j)];
            x[j] = cxd(re, im);
        }
        out.data.col(k).noalias() = a * x;
        for (int i = 0; i < l; ++i) {
            const double re = unit(rng) * noise_scale;
            const double im = unit(rng) * noise_scale;
            out.data(i, k) += cxd(re, im);
        }
    }
    return out;
}

// Rows of the full-array snapshot set belonging to one subarray.
inline SnapshotSet subarray_snapshots(const SnapshotSet& snaps, const CoprimeGeometry& g, Subarray which) {
    if (snaps.sensor_count() != g.size())
        throw std::invalid_argument("subarray_snapshots: snapshot set does not match geometry");
    const std::vector<int> idx = subarray_indices(g, which);
    SnapshotSet out;
    out.data.resize(static_cast<Eigen::Index>(idx.size()), snaps.snapshot_count());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.data.row(static_cast<Eigen::Index>(i)) = snaps.data.row(idx[i]);
    return out;
}

struct CovarianceEstimate {
    Eigen::MatrixXcd matrix;  // hermitian, sensors x sensors
    int snapshot_count = 0;
    bool degenerate() const { return snapshot_count == 0; }
};

// (1/K) sum of y(k) y(k)^H, symmetrized so the result is exactly hermitian.
inline CovarianceEstimate sample_covariance(const SnapshotSet& snaps) {
    CovarianceEstimate c;
    c.snapshot_count = snaps.snapshot_count();
    const int l = snaps.sensor_count();
    if (c.snapshot_count == 0) {
        c.matrix = Eigen::MatrixXcd::Zero(l, l);
        return c;
    }
    const Eigen::MatrixXcd r = snaps.data * snaps.data.adjoint() / static_cast<double>(c.snapshot_count);
    c.matrix = 0.5 * (r + r.adjoint());
    return c;
}

// One row per sensor, one "re+imj" cell per snapshot.
inline void write_csv(const SnapshotSet& snaps, std::ostream& os) {
    char cell[80];
    for (int i = 0; i < snaps.sensor_count(); ++i) {
        for (int k = 0; k < snaps.snapshot_count(); ++k) {
            const cxd v = snaps.data(i, k);
            std::snprintf(cell, sizeof cell, "%.12g%+.12gj", v.real(), v.imag());
            os << (k ? "," : "") << cell;
        }
        os << '\n';
    }
}

}  // namespace cpdoa
