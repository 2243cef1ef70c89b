// hierspec: hierarchical spectral learning experiments for power-law
// compositional targets. See README.md for the workflow.

#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>

#include "hierspec/experiment.hpp"
#include "hierspec/io.hpp"
#include "hierspec/linalg.hpp"
#include "hierspec/metrics.hpp"
#include "hierspec/teacher.hpp"
#include "hierspec/theory.hpp"

using namespace hierspec;
using nlohmann::json;

namespace {

// "key.path=value" overrides applied to the config JSON before parsing.
json apply_overrides(json config, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        }
        std::string path = "/" + s.substr(0, eq);
        for (auto& c : path) {
            if (c == '.') c = '/';
        }
        const std::string value = s.substr(eq + 1);
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (...) {
            parsed = value;  // plain string
        }
        config[json::json_pointer(path)] = parsed;
    }
    return config;
}

void print_warnings(const TeacherSpec& spec) {
    for (const auto& w : spec.validate()) {
        std::cerr << "warning: " << w << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    ensure_blas_kernel(argv);

    CLI::App app{"hierarchical spectral learning for power-law compositional targets"};
    app.require_subcommand(1);

    // shared teacher flags
    int d = 64, q = 2;
    double epsilon = 0.5, gamma = 0.4;
    std::string readout = "identity";
    std::string direction_scale = "unit-norm-rows";
    std::string rounding = "floor";
    bool fix_signs = false, orthogonalize = false;
    std::uint64_t seed = 1;

    const auto add_teacher_flags = [&](CLI::App* cmd) {
        cmd->add_option("-d,--dim", d, "input dimension");
        cmd->add_option("-q,--degree", q, "Hermite degree");
        cmd->add_option("--epsilon", epsilon, "latent width exponent");
        cmd->add_option("--gamma", gamma, "power-law exponent");
        cmd->add_option("--readout", readout, "identity | tanh | poly:a0,a1,...");
        cmd->add_option("--direction-scale", direction_scale,
                        "unit-norm-rows | entry-variance-dq | entry-variance-D");
        cmd->add_option("--rounding", rounding, "d1 rounding: floor | round | ceil");
        cmd->add_flag("--fix-signs", fix_signs, "force all z_i = +1");
        cmd->add_flag("--orthogonalize", orthogonalize, "Gram-Schmidt teacher rows");
        cmd->add_option("--seed", seed, "master seed");
    };

    // generate
    auto* cmd_generate = app.add_subcommand("generate", "sample a teacher to JSON");
    std::string out_path = "teacher.json";
    add_teacher_flags(cmd_generate);
    cmd_generate->add_option("-o,--out", out_path, "output file");

    // fit
    auto* cmd_fit = app.add_subcommand("fit", "run one trial and print its metrics row");
    double alpha = 3.0;
    int degree = 3;
    double ridge = 1e-5;
    bool fit_bulk_edge = false, fit_spectrum = false;
    std::string fit_out_dir = ".";
    add_teacher_flags(cmd_fit);
    cmd_fit->add_option("--alpha", alpha, "sample exponent: n = floor(d^alpha)");
    cmd_fit->add_option("--readout-degree", degree, "readout polynomial degree");
    cmd_fit->add_option("--ridge", ridge, "readout ridge");
    cmd_fit->add_flag("--bulk-edge", fit_bulk_edge, "measure the permuted bulk edge");
    cmd_fit->add_flag("--keep-spectrum", fit_spectrum, "export the full spectrum CSV");
    cmd_fit->add_option("--out-dir", fit_out_dir, "directory for exports");

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "run a seeded parameter sweep");
    std::string config_path;
    bool resume = false;
    std::vector<std::string> sets;
    cmd_sweep->add_option("--config", config_path, "sweep config JSON")->required();
    cmd_sweep->add_flag("--resume", resume, "skip cells already in the results");
    cmd_sweep->add_option("--set", sets, "override config fields: key.path=value");

    // thresholds
    auto* cmd_thresholds =
        app.add_subcommand("thresholds", "print the predicted recovery thresholds");
    double c_thr = 1.0;
    add_teacher_flags(cmd_thresholds);
    cmd_thresholds->add_option("--c-thr", c_thr, "threshold calibration constant");

    // verify-theory
    auto* cmd_verify = app.add_subcommand("verify-theory",
                                          "Monte-Carlo checks of the tensor/chaos analysis");
    bool slow = false;
    std::string verify_out;
    std::uint64_t verify_seed = 2024;
    cmd_verify->add_flag("--slow", slow, "run the larger grids");
    cmd_verify->add_option("--out", verify_out, "write the JSON report here");
    cmd_verify->add_option("--seed", verify_seed, "oracle seed");

    // figures
    auto* cmd_figures = app.add_subcommand("figures", "emit plot-ready CSV files");
    std::string results_path, figure_name, figures_out = "figures";
    double fig_c_thr = 1.0, fig_c_mse = 1.0;
    cmd_figures->add_option("--results", results_path, "sweep results CSV")->required();
    cmd_figures->add_option("--figure", figure_name,
                            "mse_vs_alpha | overlap_vs_alpha | spectrum | "
                            "directionwise | staircase | gamma_family")
        ->required();
    cmd_figures->add_option("--out", figures_out, "output directory");
    cmd_figures->add_option("--c-thr", fig_c_thr, "threshold calibration constant");
    cmd_figures->add_option("--c-mse", fig_c_mse, "MSE calibration constant");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_generate) {
            TeacherSpec spec{d, q, epsilon, gamma, readout,
                             parse_direction_scale(direction_scale), fix_signs,
                             orthogonalize, parse_rounding(rounding), seed};
            print_warnings(spec);
            const Teacher teacher = sample_teacher(spec);
            atomic_write_file(out_path, teacher.to_json() + "\n");
            std::cout << "wrote " << out_path << " (d1=" << teacher.d1()
                      << ", D=" << teacher.feature_dim() << ")\n";
            return 0;
        }

        if (*cmd_fit) {
            SweepConfig config;
            config.q = q;
            config.epsilon = epsilon;
            config.gamma = gamma;
            config.readout = readout;
            config.direction_scale = direction_scale;
            config.fix_signs = fix_signs;
            config.orthogonalize = orthogonalize;
            config.d1_rounding = rounding;
            config.d_list = {d};
            config.alpha_grid = {alpha};
            config.seeds = {seed};
            config.degree = degree;
            config.ridge = ridge;
            config.measure_bulk_edge = fit_bulk_edge;
            config.keep_spectrum = fit_spectrum;
            config.output_dir = fit_out_dir;
            config.validate();
            TeacherSpec spec{d, q, epsilon, gamma, readout,
                             parse_direction_scale(direction_scale), fix_signs,
                             orthogonalize, parse_rounding(rounding), seed};
            print_warnings(spec);
            if (fit_spectrum) {
                const SweepOutcome outcome = run_sweep(config, false);
                std::cout << read_file(outcome.results_path);
                return outcome.status == SweepStatus::all_ok ? 0 : 1;
            }
            const TrialResult r = run_trial(config, TrialCell{d, alpha, seed});
            const int d1 = static_cast<int>(r.cos2.size());
            std::cout << TrialResult::csv_header(d1) << "\n" << r.csv_row(d1) << "\n";
            return 0;
        }

        if (*cmd_sweep) {
            json raw = json::parse(read_file(config_path));
            raw = apply_overrides(std::move(raw), sets);
            const SweepConfig config = SweepConfig::from_json(raw.dump());
            const SweepOutcome outcome = run_sweep(config, resume);
            std::cout << "results: " << outcome.results_path << "\n"
                      << "completed " << outcome.completed << " rows ("
                      << outcome.skipped_resume << " resumed)\n";
            for (const auto& f : outcome.failures) {
                std::cerr << "failed cell d=" << f.cell.d << " alpha=" << f.cell.alpha
                          << " seed=" << f.cell.seed << ": " << f.reason << "\n";
            }
            return static_cast<int>(outcome.status);
        }

        if (*cmd_thresholds) {
            TeacherSpec spec{d, q, epsilon, gamma, readout,
                             parse_direction_scale(direction_scale), fix_signs,
                             orthogonalize, parse_rounding(rounding), seed};
            PredictorParams p;
            p.d = d;
            p.q = q;
            p.gamma = gamma;
            p.d1 = spec.d1();
            p.c_thr = c_thr;
            std::cout << "d=" << d << " q=" << q << " gamma=" << gamma
                      << " d1=" << p.d1 << " Z_gamma=" << format_double(p.z_gamma())
                      << "\n";
            std::cout << "i,n_i,alpha_i\n";
            for (int i = 1; i <= p.d1; ++i) {
                const double n_i = predicted_threshold(i, p);
                std::cout << i << ',' << format_double(n_i) << ','
                          << format_double(std::log(n_i) / std::log(d)) << "\n";
            }
            return 0;
        }

        if (*cmd_verify) {
            TheoryRunOptions options;
            options.slow = slow;
            options.seed = verify_seed;
            const TheorySuiteResult result = run_theory_suite(options);
            for (const auto& s : result.scalings) {
                std::cout << (s.pass ? "pass" : "FAIL") << "  " << s.quantity
                          << ": slope " << format_double(s.fitted_slope) << " (expected "
                          << format_double(s.expected_slope) << " +- "
                          << format_double(s.tolerance) << ")"
                          << (s.note.empty() ? "" : "  [" + s.note + "]") << "\n";
            }
            for (const auto& c : result.checks) {
                std::cout << (c.pass ? "pass" : "FAIL") << "  " << c.name << "\n";
                for (const auto& line : c.lines) std::cout << "      " << line << "\n";
            }
            if (result.alignment.skipped_zero_signal) {
                std::cout << "skip  population_moment_alignment (nu_1 = 0)\n";
            }
            if (!verify_out.empty()) {
                atomic_write_file(verify_out, result.to_json() + "\n");
            }
            return result.all_pass ? 0 : 3;
        }

        if (*cmd_figures) {
            const auto files = emit_figure_data(results_path,
                                                parse_figure_kind(figure_name),
                                                figures_out, fig_c_thr, fig_c_mse);
            for (const auto& f : files) std::cout << "wrote " << f << "\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
