#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hierspec/metrics.hpp"
#include "hierspec/spectral.hpp"
#include "hierspec/teacher.hpp"

namespace hierspec {

// One sweep = Cartesian product of d_list x alpha_grid x seeds, run by a
// bounded worker pool with one CSV row per trial. alpha is the sample
// exponent: n = floor(d^alpha).
struct SweepConfig {
    // teacher template (d is filled per cell)
    int q = 2;
    double epsilon = 0.5;
    double gamma = 0.4;
    std::string readout = "identity";
    std::string direction_scale = "unit-norm-rows";
    bool fix_signs = false;
    bool orthogonalize = false;
    std::string d1_rounding = "floor";

    std::vector<int> d_list;
    std::vector<double> alpha_grid;
    std::vector<std::uint64_t> seeds;

    Eigen::Index n_test = 0;  // 0 -> max(5000, 10 d1^2)
    int degree = 3;
    double ridge = 1e-5;
    std::string solver = "dense";  // "dense" | "subspace"

    int parallelism = 0;  // 0 -> auto; HIERSPEC_THREADS caps it
    std::string output_dir = "sweep_out";
    std::uint64_t memory_cap_elements = 1ULL << 28;  // n * d guard per dataset
    bool measure_bulk_edge = false;
    bool record_timing = true;
    bool keep_spectrum = false;

    std::string to_json() const;
    static SweepConfig from_json(const std::string& text);

    // Hash over the semantically meaningful fields only (not parallelism,
    // output_dir, or timing).
    std::string config_hash() const;

    // Throws std::invalid_argument on violations (empty/decreasing alpha
    // grid, n < 1, basis beyond the memory cap).
    void validate() const;
};

struct TrialCell {
    int d = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

struct TrialFailure {
    TrialCell cell;
    std::string reason;
};

enum class SweepStatus { all_ok = 0, partial = 1, invalid_config = 2 };

struct SweepOutcome {
    SweepStatus status = SweepStatus::all_ok;
    std::string results_path;
    std::string manifest_path;
    std::vector<TrialFailure> failures;
    int completed = 0;
    int skipped_resume = 0;
};

Eigen::Index samples_for(int d, double alpha);

// One experiment cell end to end: teacher and datasets from labeled seed
// streams, the spectral fit, and all metrics on an independent test set.
TrialResult run_trial(const SweepConfig& config, const TrialCell& cell);

// Executes the product of cells across workers; appends one CSV row per
// finished trial (crash-safe), then writes the canonical results file
// ordered by (d, alpha, seed) plus a JSON manifest with the config hash.
// With resume = true, rows already present for this config hash are kept
// and their cells skipped.
SweepOutcome run_sweep(const SweepConfig& config, bool resume = false);

enum class FigureKind {
    mse_vs_alpha,
    overlap_vs_alpha,
    spectrum,
    directionwise,
    staircase,
    gamma_family,
};

FigureKind parse_figure_kind(const std::string& name);

// Aggregates a results CSV (mean and interquartile band over seeds) into
// plot-ready CSV files, adding the closed-form theory columns where the
// figure calls for them. Returns the paths written.
std::vector<std::string> emit_figure_data(const std::string& results_csv,
                                          FigureKind figure,
                                          const std::string& out_dir,
                                          double c_thr = 1.0, double c_mse = 1.0);

// Parsed results row (the subset the figure emitters need).
struct ResultRow {
    int d = 0;
    int q = 0;
    double epsilon = 0.0;
    double gamma = 0.0;
    double n = 0.0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::string readout;
    double test_mse = 0.0;
    double feature_overlap = 0.0;
    int m_empirical = 0;
    double bulk_edge = 0.0;
    double wall_time = 0.0;
    std::vector<double> cos2;
};

std::vector<ResultRow> read_results_csv(const std::string& path);

}  // namespace hierspec
