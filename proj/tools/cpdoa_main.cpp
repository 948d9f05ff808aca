// Command line front end: Monte Carlo sweeps against the bound, segment
// lookup tables and one-shot residue projection.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "cpdoa/disambiguate.hpp"
#include "cpdoa/sim.hpp"

namespace {

std::string fmt(double v) { return cpdoa::detail::format_double(v); }

void print_segment_table(const cpdoa::SegmentMap& map, std::ostream& os) {
    os << "segment  psi_lo            psi_hi            k  l\n";
    char line[128];
    for (std::size_t i = 0; i < map.segments.size(); ++i) {
        const cpdoa::Segment& seg = map.segments[i];
        std::snprintf(line, sizeof line, "%-8zu %-17.10g %-17.10g %-2d %d\n", i, seg.lo, seg.hi,
                      seg.k, seg.l);
        os << line;
    }
}

void write_segment_csv(const cpdoa::SegmentMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "segment_index,psi_lo,psi_hi,k,l\n";
    for (std::size_t i = 0; i < map.segments.size(); ++i) {
        const cpdoa::Segment& seg = map.segments[i];
        out << i << ',' << fmt(seg.lo) << ',' << fmt(seg.hi) << ',' << seg.k << ',' << seg.l
            << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coprime-array direction-of-arrival simulator"};
    app.require_subcommand(1);

    // simulate
    CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo sweep and write CSV results");
    std::string config_path, doas_text, snr_text, ksweep_text, estimator_text, out_path;
    std::string dump_path;
    int m = 0, n = 0, snapshots = 0, trials = 0;
    std::uint64_t seed = 0;
    sim->add_option("--config", config_path, "flat key-value config file; flags override its entries");
    sim->add_option("--m", m, "step of subarray one (half-wavelength units)");
    sim->add_option("--n", n, "step of subarray two, coprime with --m");
    sim->add_option("--doas", doas_text, "comma-separated electrical angles, e.g. 0.1pi,-0.25pi");
    sim->add_option("--snapshots", snapshots, "snapshot count when sweeping SNR");
    sim->add_option("--snr-db", snr_text,
                    "SNR axis as start:step:stop or comma list; a single value fixes the SNR "
                    "when --k-sweep is given");
    sim->add_option("--k-sweep", ksweep_text, "snapshot-count axis as start:step:stop or comma list");
    sim->add_option("--trials", trials, "Monte Carlo trials per sweep point");
    sim->add_option("--seed", seed, "base RNG seed; per-trial streams derive from it");
    sim->add_option("--estimator", estimator_text, "coprime-mode or grid-music");
    sim->add_option("--out", out_path, "CSV output path; the text summary lands next to it");
    sim->add_option("--dump-snapshots", dump_path,
                    "also write the first trial's snapshot set as CSV (one row per sensor)");

    // segments
    CLI::App* seg = app.add_subcommand("segments", "print the alias segment table for a geometry");
    int seg_m = 0, seg_n = 0;
    std::string seg_out;
    seg->add_option("--m", seg_m, "step of subarray one")->required();
    seg->add_option("--n", seg_n, "step of subarray two")->required();
    seg->add_option("--out", seg_out, "optionally also write the table as CSV");

    // project
    CLI::App* proj = app.add_subcommand("project", "disambiguate one residue pair");
    std::string rep1_text, rep2_text;
    int proj_m = 0, proj_n = 0;
    proj->add_option("--rep1", rep1_text, "step-n residue in [-pi, -pi + 2pi/n), angle literal")
        ->required();
    proj->add_option("--rep2", rep2_text, "step-m residue in [-pi, -pi + 2pi/m), angle literal")
        ->required();
    proj->add_option("--m", proj_m, "step of subarray one")->required();
    proj->add_option("--n", proj_n, "step of subarray two")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            cpdoa::ExperimentConfig cfg;
            if (sim->count("--config"))
                for (const auto& [key, value] : cpdoa::load_config_file(config_path))
                    cpdoa::apply_config_entry(cfg, key, value);
            if (sim->count("--m")) cfg.m = m;
            if (sim->count("--n")) cfg.n = n;
            if (sim->count("--doas")) cfg.doas = cpdoa::parse_angle_list(doas_text);
            if (sim->count("--snapshots")) cfg.snapshots = snapshots;
            if (sim->count("--snr-db")) cfg.snr_sweep = cpdoa::parse_sweep(snr_text);
            if (sim->count("--k-sweep")) cfg.snapshot_sweep = cpdoa::parse_snapshot_sweep(ksweep_text);
            if (sim->count("--trials")) cfg.trials = trials;
            if (sim->count("--seed")) cfg.seed = seed;
            if (sim->count("--estimator")) cfg.estimator = cpdoa::parse_estimator(estimator_text);
            if (sim->count("--out")) cfg.out_path = out_path;
            cpdoa::finalize_config(cfg);
            cpdoa::validate(cfg);

            if (sim->count("--dump-snapshots")) {
                const cpdoa::CoprimeGeometry g = cpdoa::make_geometry(cfg.m, cfg.n);
                double first_value = 0.0;
                if (cfg.axis() == cpdoa::SweepAxis::snr_db)
                    first_value = *std::min_element(cfg.snr_sweep.begin(), cfg.snr_sweep.end());
                else
                    first_value = *std::min_element(cfg.snapshot_sweep.begin(), cfg.snapshot_sweep.end());
                cpdoa::SourceScenario scenario;
                scenario.doas = cfg.doas;
                scenario.powers.assign(cfg.doas.size(), 1.0);
                scenario.noise_power = cpdoa::snr_db_to_noise_power(
                    cfg.axis() == cpdoa::SweepAxis::snr_db ? first_value : cfg.snr_db);
                const int k = cfg.axis() == cpdoa::SweepAxis::snapshots
                                  ? static_cast<int>(first_value)
                                  : cfg.snapshots;
                const cpdoa::SnapshotSet snaps = cpdoa::synthesize_snapshots(
                    g, scenario, k, cpdoa::trial_stream(cfg.seed, first_value, 0));
                std::ofstream dump(dump_path, std::ios::binary);
                if (!dump) throw std::runtime_error("cannot open " + dump_path);
                cpdoa::write_csv(snaps, dump);
                std::cout << "snapshots: " << dump_path << "\n";
            }

            const cpdoa::SweepResult result = cpdoa::run_sweep(cfg);
            const std::string summary_path = cfg.out_path + ".summary.txt";
            cpdoa::emit_outputs(result, cfg, cfg.out_path, summary_path);
            std::cout << cpdoa::format_summary(result, cfg);
            std::cout << "results: " << cfg.out_path << "\nsummary: " << summary_path << "\n";
        } else if (seg->parsed()) {
            const cpdoa::SegmentMap map = cpdoa::build_segment_map(seg_m, seg_n);
            print_segment_table(map, std::cout);
            if (seg->count("--out")) {
                write_segment_csv(map, seg_out);
                std::cout << "table: " << seg_out << "\n";
            }
        } else if (proj->parsed()) {
            const double rep1 = cpdoa::parse_angle(rep1_text);
            const double rep2 = cpdoa::parse_angle(rep2_text);
            const cpdoa::ProjectionResult r = cpdoa::project_single(rep1, rep2, proj_m, proj_n);
            std::cout << "psi: " << fmt(r.psi) << "\ncost: " << fmt(r.cost)
                      << "\nlift_n: " << r.lift_n << "\nlift_m: " << r.lift_m << "\n";
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
