#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hierspec/experiment.hpp"
#include "hierspec/io.hpp"

using namespace hierspec;
namespace fs = std::filesystem;

namespace {

SweepConfig tiny_config(const std::string& dir) {
    SweepConfig c;
    c.q = 2;
    c.epsilon = 0.5;
    c.gamma = 0.4;
    c.readout = "identity";
    c.d_list = {12};
    c.alpha_grid = {2.0, 2.5, 3.0};
    c.seeds = {1, 2};
    c.degree = 1;
    c.ridge = 1e-8;
    c.n_test = 2000;
    c.parallelism = 2;
    c.record_timing = false;
    c.output_dir = dir;
    return c;
}

std::string fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "hierspec_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

}  // namespace

TEST_CASE("sweep config validation") {
    SweepConfig c = tiny_config(fresh_dir("validate"));
    CHECK_NOTHROW(c.validate());

    SweepConfig bad = c;
    bad.alpha_grid = {};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.alpha_grid = {2.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.alpha_grid = {3.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.seeds = {};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.d_list = {2};
    bad.epsilon = 0.1;  // d1 = floor(2^0.1) = 1 fine; alpha 2 -> n = 4 ok
    CHECK_NOTHROW(bad.validate());
    bad.alpha_grid = {-2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.solver = "magic";
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.memory_cap_elements = 10;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("config json round trip and hash semantics") {
    SweepConfig c = tiny_config(fresh_dir("hash"));
    const SweepConfig back = SweepConfig::from_json(c.to_json());
    CHECK(back.config_hash() == c.config_hash());
    CHECK(back.d_list == c.d_list);
    CHECK(back.alpha_grid == c.alpha_grid);

    SweepConfig changed = c;
    changed.gamma = 0.8;
    CHECK(changed.config_hash() != c.config_hash());
    changed = c;
    changed.seeds = {1, 2, 3};
    CHECK(changed.config_hash() != c.config_hash());

    // non-semantic fields do not move the hash
    changed = c;
    changed.parallelism = 7;
    changed.output_dir = "elsewhere";
    changed.record_timing = true;
    CHECK(changed.config_hash() == c.config_hash());
}

TEST_CASE("samples_for matches floor(d^alpha)") {
    CHECK(samples_for(64, 1.5) == 512);
    CHECK(samples_for(10, 3.0) == 1000);
    CHECK(samples_for(60, 2.0) == 3600);
}

TEST_CASE("sweep: row counting, canonical order, determinism") {
    const std::string dir_a = fresh_dir("det_a");
    SweepConfig c = tiny_config(dir_a);
    const SweepOutcome out_a = run_sweep(c);
    CHECK(out_a.status == SweepStatus::all_ok);
    CHECK(out_a.completed == 6);  // 1 d x 3 alpha x 2 seeds

    const std::vector<ResultRow> rows = read_results_csv(out_a.results_path);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const bool ordered = rows[i - 1].alpha < rows[i].alpha ||
                             (rows[i - 1].alpha == rows[i].alpha &&
                              rows[i - 1].seed < rows[i].seed);
        CHECK(ordered);
    }

    // identical config, different directory: byte-identical results
    const std::string dir_b = fresh_dir("det_b");
    SweepConfig c2 = tiny_config(dir_b);
    const SweepOutcome out_b = run_sweep(c2);
    CHECK(read_file(out_a.results_path) == read_file(out_b.results_path));
}

TEST_CASE("trial cells are independent of the surrounding sweep") {
    const std::string dir = fresh_dir("isolation");
    SweepConfig c = tiny_config(dir);
    const SweepOutcome out = run_sweep(c);
    const std::vector<ResultRow> rows = read_results_csv(out.results_path);

    const TrialResult lone = run_trial(c, TrialCell{12, 2.5, 2});
    bool found = false;
    for (const auto& r : rows) {
        if (r.alpha == 2.5 && r.seed == 2) {
            found = true;
            CHECK(r.test_mse == lone.test_mse);
            CHECK(r.feature_overlap == lone.feature_overlap);
            REQUIRE(r.cos2.size() == lone.cos2.size());
            for (std::size_t i = 0; i < r.cos2.size(); ++i) {
                CHECK(r.cos2[i] == lone.cos2[i]);
            }
        }
    }
    CHECK(found);
}

TEST_CASE("sweep resume is idempotent and skips completed cells") {
    const std::string dir = fresh_dir("resume");
    SweepConfig c = tiny_config(dir);
    const SweepOutcome full = run_sweep(c);
    const std::string full_bytes = read_file(full.results_path);

    // simulate a crash: drop the final results and truncate the partial file
    // to its first three data rows
    {
        std::ifstream in(dir + "/results.partial.csv");
        std::string line, kept;
        int data_rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (data_rows == 0 || data_rows <= 3) kept += line + "\n";
            ++data_rows;
            if (data_rows > 3) break;
        }
        in.close();
        atomic_write_file(dir + "/results.partial.csv", kept);
        fs::remove(dir + "/results.csv");
    }

    const SweepOutcome resumed = run_sweep(c, true);
    CHECK(resumed.status == SweepStatus::all_ok);
    CHECK(resumed.skipped_resume == 3);
    CHECK(read_file(resumed.results_path) == full_bytes);

    // resuming a complete sweep does nothing
    const SweepOutcome again = run_sweep(c, true);
    CHECK(again.skipped_resume == 6);
    CHECK(read_file(again.results_path) == full_bytes);

    // resume against a different config is refused
    SweepConfig other = c;
    other.gamma = 0.8;
    CHECK_THROWS_AS(run_sweep(other, true), std::invalid_argument);
}

TEST_CASE("memory-capped cells are skipped and recorded, sweep continues") {
    const std::string dir = fresh_dir("skip");
    SweepConfig c = tiny_config(dir);
    c.memory_cap_elements = 15000;  // n*d for alpha=3.0 exceeds this
    const SweepOutcome out = run_sweep(c);
    CHECK(out.status == SweepStatus::partial);
    CHECK(out.completed == 4);
    CHECK(out.failures.size() == 2);
    for (const auto& f : out.failures) {
        CHECK(f.cell.alpha == 3.0);
        CHECK(f.reason.find("memory cap") != std::string::npos);
    }
}

TEST_CASE("figure emission from sweep results") {
    const std::string dir = fresh_dir("figures");
    SweepConfig c = tiny_config(dir);
    c.keep_spectrum = true;
    const SweepOutcome out = run_sweep(c);

    const std::string figdir = dir + "/figs";
    for (const auto kind : {FigureKind::mse_vs_alpha, FigureKind::overlap_vs_alpha,
                            FigureKind::staircase, FigureKind::directionwise,
                            FigureKind::gamma_family, FigureKind::spectrum}) {
        const auto files = emit_figure_data(out.results_path, kind, figdir);
        CHECK(!files.empty());
        for (const auto& f : files) CHECK(fs::exists(f));
    }

    // spectrum export is one eigenvalue column of length D = B(12, 2) = 78
    const auto spectra = emit_figure_data(out.results_path, FigureKind::spectrum, figdir);
    std::ifstream in(spectra.front());
    std::string header;
    std::getline(in, header);
    CHECK(header == "eigenvalue");
    int count = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++count;
    }
    CHECK(count == 78);

    // staircase carries the theory column
    std::ifstream st(figdir + "/fig_staircase.csv");
    std::getline(st, header);
    CHECK(header.find("m_th") != std::string::npos);

    // directionwise tracks {1, 3} at d1 = 3
    std::ifstream dw(figdir + "/fig_directionwise.csv");
    std::getline(dw, header);
    CHECK(header.find("cos2_1_mean") != std::string::npos);
    CHECK(header.find("cos2_3_mean") != std::string::npos);
    CHECK(header.find("cos2_5_mean") == std::string::npos);
}

TEST_CASE("figures require spectrum exports when asked for spectra") {
    const std::string dir = fresh_dir("nospectrum");
    SweepConfig c = tiny_config(dir);
    const SweepOutcome out = run_sweep(c);
    CHECK_THROWS_AS(emit_figure_data(out.results_path, FigureKind::spectrum, dir + "/f"),
                    std::runtime_error);
}
