#pragma once
// Monte Carlo experiment driver: configuration, per-trial estimation, sweep
// aggregation against the bound, and deterministic CSV/text emission.

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cpdoa/array_model.hpp"
#include "cpdoa/common.hpp"
#include "cpdoa/disambiguate.hpp"
#include "cpdoa/evaluation.hpp"
#include "cpdoa/mode.hpp"

namespace cpdoa {

enum class EstimatorKind { coprime_mode, grid_music };
enum class SweepAxis { snr_db, snapshots };

struct ExperimentConfig {
    int m = 5;
    int n = 7;
    std::vector<double> doas = {0.1 * pi};
    int snapshots = 100;             // fixed snapshot count when sweeping SNR
    double snr_db = 0.0;             // fixed SNR when sweeping snapshots
    std::vector<double> snr_sweep;   // SNR axis values, dB
    std::vector<int> snapshot_sweep; // snapshot-count axis values
    int trials = 200;
    std::uint64_t seed = 1;
    EstimatorKind estimator = EstimatorKind::coprime_mode;
    int mode_iterations = 2;
    std::string out_path = "results.csv";

    SweepAxis axis() const {
        const bool snr = !snr_sweep.empty();
        const bool snap = !snapshot_sweep.empty();
        if (snr == snap)
            throw std::invalid_argument("ExperimentConfig: exactly one sweep axis must be active");
        return snr ? SweepAxis::snr_db : SweepAxis::snapshots;
    }
};

inline void validate(const ExperimentConfig& cfg) {
    cfg.axis();
    if (cfg.trials < 1) throw std::invalid_argument("ExperimentConfig: need at least one trial");
    if (cfg.snapshots < 1) throw std::invalid_argument("ExperimentConfig: need at least one snapshot");
    for (int k : cfg.snapshot_sweep)
        if (k < 1) throw std::invalid_argument("ExperimentConfig: swept snapshot counts must be positive");
    if (cfg.mode_iterations < 1) throw std::invalid_argument("ExperimentConfig: need at least one fit iteration");
    make_geometry(cfg.m, cfg.n);
    SourceScenario probe{cfg.doas, std::vector<double>(cfg.doas.size(), 1.0), 1.0};
    validate(probe);
}

inline double snr_db_to_noise_power(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

// RNG stream for one trial, a pure function of the run seed, the sweep value
// and the trial index.
inline std::uint64_t trial_stream(std::uint64_t seed, double sweep_value, int trial_index) {
    const std::uint64_t v = mix64(std::bit_cast<std::uint64_t>(sweep_value));
    return seed ^ mix64(v + static_cast<std::uint64_t>(trial_index));
}

struct TrialRecord {
    std::vector<double> estimates;
    bool failed = false;
};

// One synthetic trial at one sweep point.  Estimation failures (subspace
// collapse, missing peaks) are recorded, never propagated.
inline TrialRecord run_trial(const ExperimentConfig& cfg, double sweep_value, int trial_index) {
    const CoprimeGeometry g = make_geometry(cfg.m, cfg.n);
    const SweepAxis axis = cfg.axis();
    const double snr_db = axis == SweepAxis::snr_db ? sweep_value : cfg.snr_db;
    const int snapshots = axis == SweepAxis::snapshots
                              ? static_cast<int>(std::llround(sweep_value))
                              : cfg.snapshots;
    SourceScenario scenario;
    scenario.doas = cfg.doas;
    scenario.powers.assign(cfg.doas.size(), 1.0);
    scenario.noise_power = snr_db_to_noise_power(snr_db);

    const SnapshotSet snaps =
        synthesize_snapshots(g, scenario, snapshots, trial_stream(cfg.seed, sweep_value, trial_index));
    const int d = scenario.source_count();

    TrialRecord rec;
    try {
        if (cfg.estimator == EstimatorKind::coprime_mode) {
            const FoldedEstimate est1 = estimate_subarray(snaps, g, Subarray::first, d, cfg.mode_iterations);
            const FoldedEstimate est2 = estimate_subarray(snaps, g, Subarray::second, d, cfg.mode_iterations);
            rec.estimates = pair_and_project(est2.reps, est1.reps, cfg.m, cfg.n).doas;
        } else {
            const CovarianceEstimate cov = sample_covariance(snaps);
            const int grid = std::max(4 * cfg.m * cfg.n, 4096);
            rec.estimates = grid_music(cov, g, d, grid).peaks;
        }
    } catch (const estimation_error&) {
        rec.estimates.clear();
        rec.failed = true;
    }
    return rec;
}

struct SweepRow {
    double sweep_value = 0.0;
    std::vector<double> mse;  // per source
    std::vector<double> crb;  // per source
    double gross_error_rate = 0.0;
    int trials = 0;
    double wall_seconds = 0.0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::snr_db;
    std::vector<SweepRow> rows;
};

namespace detail {

// Index-parallel loop with deterministic output: every index writes its own
// slot, so the schedule cannot affect the result.
template <typename Fn>
inline void parallel_for(int count, Fn&& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    const int workers = std::min<int>(std::max(1u, hw), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_lock;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> guard(error_lock);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// Full Monte Carlo sweep: rows ordered by sweep value, each aggregating
// `trials` independent trials plus the bound at that operating point.  A
// failed trial contributes the worst-case circular error pi to every source
// and counts as a gross error.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    const CoprimeGeometry g = make_geometry(cfg.m, cfg.n);
    const SweepAxis axis = cfg.axis();
    const int d = static_cast<int>(cfg.doas.size());

    std::vector<double> points;
    if (axis == SweepAxis::snr_db) {
        points = cfg.snr_sweep;
    } else {
        for (int k : cfg.snapshot_sweep) points.push_back(static_cast<double>(k));
    }
    std::sort(points.begin(), points.end());

    const double gross_threshold = pi / std::max(cfg.m, cfg.n);
    SweepResult result;
    result.axis = axis;
    for (double value : points) {
        const auto t0 = std::chrono::steady_clock::now();
        SweepRow row;
        row.sweep_value = value;
        row.trials = cfg.trials;

        SourceScenario scenario;
        scenario.doas = cfg.doas;
        scenario.powers.assign(cfg.doas.size(), 1.0);
        scenario.noise_power =
            snr_db_to_noise_power(axis == SweepAxis::snr_db ? value : cfg.snr_db);
        const int snapshots =
            axis == SweepAxis::snapshots ? static_cast<int>(std::llround(value)) : cfg.snapshots;
        row.crb = stochastic_crb(g, scenario, snapshots).bounds;

        std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
        detail::parallel_for(cfg.trials, [&](int t) { records[static_cast<std::size_t>(t)] = run_trial(cfg, value, t); });

        row.mse.assign(static_cast<std::size_t>(d), 0.0);
        int gross = 0;
        for (const TrialRecord& rec : records) {
            if (rec.failed) {
                for (double& acc : row.mse) acc += pi * pi;
                ++gross;
                continue;
            }
            const std::vector<double> errs = matched_errors(rec.estimates, cfg.doas);
            bool is_gross = false;
            for (int j = 0; j < d; ++j) {
                row.mse[static_cast<std::size_t>(j)] += errs[static_cast<std::size_t>(j)] * errs[static_cast<std::size_t>(j)];
                if (std::abs(errs[static_cast<std::size_t>(j)]) > gross_threshold) is_gross = true;
            }
            if (is_gross) ++gross;
        }
        for (double& acc : row.mse) acc /= static_cast<double>(cfg.trials);
        row.gross_error_rate = static_cast<double>(gross) / static_cast<double>(cfg.trials);
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.rows.push_back(std::move(row));
    }
    return result;
}

inline const char* axis_name(SweepAxis axis) {
    return axis == SweepAxis::snr_db ? "snr_db" : "snapshots";
}

inline const char* estimator_name(EstimatorKind kind) {
    return kind == EstimatorKind::coprime_mode ? "coprime-mode" : "grid-music";
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

// CSV with one row per (sweep point, source); wall time is deliberately
// excluded so identical runs are byte-identical.
inline std::string format_csv(const SweepResult& result) {
    std::string out = "sweep_axis,sweep_value,source_index,mse,crb,gross_error_rate,trials\n";
    for (const SweepRow& row : result.rows) {
        for (std::size_t j = 0; j < row.mse.size(); ++j) {
            out += axis_name(result.axis);
            out += ',';
            out += detail::format_double(row.sweep_value);
            out += ',';
            out += std::to_string(j);
            out += ',';
            out += detail::format_double(row.mse[j]);
            out += ',';
            out += detail::format_double(row.crb[j]);
            out += ',';
            out += detail::format_double(row.gross_error_rate);
            out += ',';
            out += std::to_string(row.trials);
            out += '\n';
        }
    }
    return out;
}

inline std::string format_summary(const SweepResult& result, const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "coprime doa sweep summary\n";
    os << "  geometry: m=" << cfg.m << " n=" << cfg.n << " (sensors: " << cfg.m + cfg.n - 1 << ")\n";
    os << "  doas (rad):";
    for (double psi : cfg.doas) os << ' ' << detail::format_double(psi);
    os << '\n';
    os << "  estimator: " << estimator_name(cfg.estimator) << "\n";
    os << "  sweep axis: " << axis_name(result.axis) << "\n";
    if (result.axis == SweepAxis::snr_db)
        os << "  snapshots: " << cfg.snapshots << "\n";
    else
        os << "  snr_db: " << detail::format_double(cfg.snr_db) << "\n";
    os << "  trials per point: " << cfg.trials << "\n";
    os << "  seed: " << cfg.seed << "\n";
    double total = 0.0;
    for (const SweepRow& row : result.rows) {
        os << "  point " << detail::format_double(row.sweep_value) << ": wall "
           << detail::format_double(row.wall_seconds) << " s, gross error rate "
           << detail::format_double(row.gross_error_rate) << "\n";
        total += row.wall_seconds;
    }
    os << "  total wall time: " << detail::format_double(total) << " s\n";
    return os.str();
}

// Writes the CSV to `csv_path` and the plain-text run summary (the only
// place wall time appears) next to it.
inline void emit_outputs(const SweepResult& result, const ExperimentConfig& cfg,
                         const std::string& csv_path, const std::string& summary_path) {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("emit_outputs: cannot open " + csv_path);
    csv << format_csv(result);
    csv.close();
    std::ofstream summary(summary_path, std::ios::binary);
    if (!summary) throw std::runtime_error("emit_outputs: cannot open " + summary_path);
    summary << format_summary(result, cfg);
}

// --- CLI-facing parsing helpers -------------------------------------------

// Angle literal: a decimal number with an optional "pi" suffix ("0.1pi",
// "-pi", "1.2").
inline double parse_angle(const std::string& text) {
    std::string s = text;
    s.erase(0, s.find_first_not_of(" \t"));
    const std::size_t last = s.find_last_not_of(" \t");
    s.erase(last == std::string::npos ? 0 : last + 1);
    if (s.empty()) throw std::invalid_argument("parse_angle: empty angle literal");
    double factor = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        factor = pi;
        s.erase(s.size() - 2);
        if (s.empty() || s == "+") return factor;
        if (s == "-") return -factor;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("parse_angle: cannot parse '" + text + "'");
    }
    if (used != s.size()) throw std::invalid_argument("parse_angle: cannot parse '" + text + "'");
    return value * factor;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<double> parse_angle_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& item : split(text, ','))
        if (!item.empty()) out.push_back(parse_angle(item));
    if (out.empty()) throw std::invalid_argument("parse_angle_list: no angles in '" + text + "'");
    return out;
}

// Sweep literal: either "start:step:stop" (inclusive) or a comma list.
inline std::vector<double> parse_sweep(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        const std::vector<std::string> parts = split(text, ':');
        if (parts.size() != 3)
            throw std::invalid_argument("parse_sweep: expected start:step:stop in '" + text + "'");
        const double start = std::stod(parts[0]);
        const double step = std::stod(parts[1]);
        const double stop = std::stod(parts[2]);
        if (step == 0.0) throw std::invalid_argument("parse_sweep: step must be non-zero");
        if ((stop - start) * step < 0.0)
            throw std::invalid_argument("parse_sweep: step walks away from stop in '" + text + "'");
        std::vector<double> out;
        const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (int i = 0; i < count; ++i) out.push_back(start + i * step);
        return out;
    }
    std::vector<double> out;
    for (const std::string& item : split(text, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    if (out.empty()) throw std::invalid_argument("parse_sweep: no values in '" + text + "'");
    return out;
}

inline std::vector<int> parse_snapshot_sweep(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_sweep(text)) out.push_back(static_cast<int>(std::llround(v)));
    return out;
}

inline EstimatorKind parse_estimator(const std::string& text) {
    if (text == "coprime-mode") return EstimatorKind::coprime_mode;
    if (text == "grid-music") return EstimatorKind::grid_music;
    throw std::invalid_argument("parse_estimator: unknown estimator '" + text + "'");
}

// Flat key-value config file: one "key value" or "key=value" per line,
// '#' starts a comment.  Returned in file order, later keys overriding.
inline std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_config_file: cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t eq = line.find('=');
        if (eq != std::string::npos) line[eq] = ' ';
        std::istringstream is(line);
        std::string key, value;
        if (!(is >> key)) continue;
        std::getline(is, value);
        value.erase(0, value.find_first_not_of(" \t"));
        const std::size_t last = value.find_last_not_of(" \t");
        value.erase(last == std::string::npos ? 0 : last + 1);
        if (value.empty()) throw std::invalid_argument("load_config_file: key '" + key + "' has no value");
        out[key] = value;
    }
    return out;
}

// Applies one config-file entry; keys mirror the CLI flag names.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "m") cfg.m = std::stoi(value);
    else if (key == "n") cfg.n = std::stoi(value);
    else if (key == "doas") cfg.doas = parse_angle_list(value);
    else if (key == "snapshots") cfg.snapshots = std::stoi(value);
    else if (key == "snr-db") cfg.snr_sweep = parse_sweep(value);
    else if (key == "k-sweep") cfg.snapshot_sweep = parse_snapshot_sweep(value);
    else if (key == "trials") cfg.trials = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "estimator") cfg.estimator = parse_estimator(value);
    else if (key == "out") cfg.out_path = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

// When one axis holds a sweep and the other a single value, the single value
// is the fixed operating point, not a one-point sweep.
inline void finalize_config(ExperimentConfig& cfg) {
    if (!cfg.snapshot_sweep.empty() && cfg.snr_sweep.size() == 1) {
        cfg.snr_db = cfg.snr_sweep[0];
        cfg.snr_sweep.clear();
    } else if (!cfg.snr_sweep.empty() && cfg.snapshot_sweep.size() == 1) {
        cfg.snapshots = cfg.snapshot_sweep[0];
        cfg.snapshot_sweep.clear();
    }
}

}  // namespace cpdoa
