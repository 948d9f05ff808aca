#pragma once
// Resolution of aliased per-subarray estimates on the residue torus.
//
// A source at electrical angle psi leaves residue rep_n in
// [-pi, -pi + 2pi/n) at the step-n subarray and rep_m in [-pi, -pi + 2pi/m)
// at the step-m subarray.  As psi walks [-pi, pi) the residue pair traces
// m + n - 1 slope-(1,1) segments; coprimality makes the map injective, so a
// measured residue pair identifies psi by projection onto those segments.
// Enumerating all lifted alias pairs realizes that projection exactly: the
// candidate for lifts (k, l) is the circular midpoint, its cost half the
// squared lift gap.

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "cpdoa/common.hpp"

namespace cpdoa {

namespace detail {

inline void validate_coprime_pair(int m, int n) {
    if (m < 2 || n < 2 || m == n)
        throw std::invalid_argument("coprime pair: need distinct m, n >= 2");
    if (std::gcd(m, n) != 1)
        throw std::invalid_argument("coprime pair: m and n must be coprime");
}

}  // namespace detail

// One maximal interval of psi on which the alias indices are constant:
// psi = rep_n + k * 2pi/n = rep_m + l * 2pi/m throughout [lo, hi).
struct Segment {
    double lo = 0.0;
    double hi = 0.0;
    int k = 0;  // alias index of the step-n residue
    int l = 0;  // alias index of the step-m residue
};

struct SegmentMap {
    int m = 0;
    int n = 0;
    std::vector<Segment> segments;  // m + n - 1 entries covering [-pi, pi)
};

inline SegmentMap build_segment_map(int m, int n) {
    detail::validate_coprime_pair(m, n);
    const double period_n = two_pi / n;
    const double period_m = two_pi / m;
    std::vector<double> breaks;
    for (int k = 0; k < n; ++k) breaks.push_back(-pi + k * period_n);
    for (int l = 0; l < m; ++l) breaks.push_back(-pi + l * period_m);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    SegmentMap map;
    map.m = m;
    map.n = n;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        Segment seg;
        seg.lo = breaks[i];
        seg.hi = (i + 1 < breaks.size()) ? breaks[i + 1] : pi;
        const double mid = 0.5 * (seg.lo + seg.hi);
        seg.k = std::clamp(static_cast<int>(std::floor((mid + pi) / period_n)), 0, n - 1);
        seg.l = std::clamp(static_cast<int>(std::floor((mid + pi) / period_m)), 0, m - 1);
        map.segments.push_back(seg);
    }
    return map;
}

struct ProjectionResult {
    double psi = 0.0;   // disambiguated angle in [-pi, pi)
    double cost = 0.0;  // squared torus distance of the residue pair to its segment
    int lift_n = 0;
    int lift_m = 0;
};

// Nearest point of the segment structure to the measured residue pair.
// All n x m alias lifts are scored; ties go to the lexicographically
// smallest (lift_n, lift_m).
inline ProjectionResult project_single(double rep_n, double rep_m, int m, int n) {
    detail::validate_coprime_pair(m, n);
    const double period_n = two_pi / n;
    const double period_m = two_pi / m;
    if (!(rep_n >= -pi && rep_n < -pi + period_n))
        throw std::invalid_argument("project_single: rep_n outside [-pi, -pi + 2pi/n)");
    if (!(rep_m >= -pi && rep_m < -pi + period_m))
        throw std::invalid_argument("project_single: rep_m outside [-pi, -pi + 2pi/m)");

    ProjectionResult best;
    best.cost = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const double a = rep_n + k * period_n;
        for (int l = 0; l < m; ++l) {
            const double b = rep_m + l * period_m;
            const double delta = wrap_to_pi(a - b);
            const double cost = 0.5 * delta * delta;
            if (cost < best.cost) {
                best.cost = cost;
                best.psi = wrap_to_half_open(b + 0.5 * delta);
                best.lift_n = k;
                best.lift_m = l;
            }
        }
    }
    return best;
}

enum class PairingStrategy { automatic, exhaustive, greedy };

struct PairingResult {
    std::vector<int> assignment;  // assignment[i] = index into reps_m paired with reps_n[i]
    std::vector<double> doas;     // disambiguated angle per reps_n entry
    double total_cost = 0.0;
    PairingStrategy used = PairingStrategy::exhaustive;
};

// Joint disambiguation of d sources: match the two subarrays' residue lists
// and project each matched pair.  Exhaustive search scores every assignment
// (ties to the lexicographically smallest); the greedy fallback repeatedly
// takes the globally cheapest remaining pair.  `automatic` uses exhaustive
// up to d = 6.
inline PairingResult pair_and_project(const std::vector<double>& reps_n,
                                      const std::vector<double>& reps_m, int m, int n,
                                      PairingStrategy strategy = PairingStrategy::automatic) {
    if (reps_n.empty() || reps_n.size() != reps_m.size())
        throw std::invalid_argument("pair_and_project: residue lists must be non-empty and equally sized");
    const int d = static_cast<int>(reps_n.size());
    if (strategy == PairingStrategy::automatic)
        strategy = d <= 6 ? PairingStrategy::exhaustive : PairingStrategy::greedy;

    std::vector<std::vector<ProjectionResult>> proj(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        proj[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j)
            proj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                project_single(reps_n[static_cast<std::size_t>(i)], reps_m[static_cast<std::size_t>(j)], m, n);
    }

    PairingResult out;
    out.used = strategy;
    out.assignment.resize(static_cast<std::size_t>(d));

    if (strategy == PairingStrategy::exhaustive) {
        std::vector<int> perm(static_cast<std::size_t>(d));
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<int> best_perm;
        double best_cost = std::numeric_limits<double>::infinity();
        do {
            double cost = 0.0;
            for (int i = 0; i < d; ++i)
                cost += proj[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].cost;
            if (cost < best_cost) {
                best_cost = cost;
                best_perm = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        out.assignment = best_perm;
        out.total_cost = best_cost;
    } else {
        struct Entry {
            double cost;
            int i, j;
        };
        std::vector<Entry> entries;
        entries.reserve(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                entries.push_back({proj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].cost, i, j});
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.cost != b.cost) return a.cost < b.cost;
            if (a.i != b.i) return a.i < b.i;
            return a.j < b.j;
        });
        std::vector<bool> row_used(static_cast<std::size_t>(d), false), col_used(static_cast<std::size_t>(d), false);
        out.total_cost = 0.0;
        for (const Entry& e : entries) {
            if (row_used[static_cast<std::size_t>(e.i)] || col_used[static_cast<std::size_t>(e.j)]) continue;
            row_used[static_cast<std::size_t>(e.i)] = true;
            col_used[static_cast<std::size_t>(e.j)] = true;
            out.assignment[static_cast<std::size_t>(e.i)] = e.j;
            out.total_cost += e.cost;
        }
    }

    out.doas.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        out.doas[static_cast<std::size_t>(i)] =
            proj[static_cast<std::size_t>(i)][static_cast<std::size_t>(out.assignment[static_cast<std::size_t>(i)])].psi;
    return out;
}

// Canonical angle (segment midpoint) for a consistent alias index pair.
// Of the n x m index pairs exactly m + n - 1 are consistent, one per segment.
inline double residues_to_psi_crt(int k, int l, int m, int n) {
    detail::validate_coprime_pair(m, n);
    if (k < 0 || k >= n || l < 0 || l >= m)
        throw std::invalid_argument("residues_to_psi_crt: alias indices out of range");
    const double period_n = two_pi / n;
    const double period_m = two_pi / m;
    const double lo = std::max(-pi + k * period_n, -pi + l * period_m);
    const double hi = std::min(-pi + (k + 1) * period_n, -pi + (l + 1) * period_m);
    if (!(lo < hi))
        throw std::invalid_argument("residues_to_psi_crt: inconsistent alias index pair");
    return 0.5 * (lo + hi);
}

}  // namespace cpdoa
