#include "hierspec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hierspec/io.hpp"
#include "hierspec/linalg.hpp"
#include "hierspec/numerics.hpp"
#include "hierspec/rng.hpp"

namespace hierspec {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json config_to_json_obj(const SweepConfig& c, bool semantic_only) {
    json j;
    j["q"] = c.q;
    j["epsilon"] = c.epsilon;
    j["gamma"] = c.gamma;
    j["readout"] = c.readout;
    j["direction_scale"] = c.direction_scale;
    j["fix_signs"] = c.fix_signs;
    j["orthogonalize"] = c.orthogonalize;
    j["d1_rounding"] = c.d1_rounding;
    j["d_list"] = c.d_list;
    j["alpha_grid"] = c.alpha_grid;
    j["seeds"] = c.seeds;
    j["n_test"] = c.n_test;
    j["degree"] = c.degree;
    j["ridge"] = c.ridge;
    j["solver"] = c.solver;
    j["memory_cap_elements"] = c.memory_cap_elements;
    j["measure_bulk_edge"] = c.measure_bulk_edge;
    j["keep_spectrum"] = c.keep_spectrum;
    if (!semantic_only) {
        j["parallelism"] = c.parallelism;
        j["output_dir"] = c.output_dir;
        j["record_timing"] = c.record_timing;
    }
    return j;
}

}  // namespace

std::string SweepConfig::to_json() const {
    return config_to_json_obj(*this, false).dump(2);
}

SweepConfig SweepConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    SweepConfig c;
    const auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("q", c.q);
    get("epsilon", c.epsilon);
    get("gamma", c.gamma);
    get("readout", c.readout);
    get("direction_scale", c.direction_scale);
    get("fix_signs", c.fix_signs);
    get("orthogonalize", c.orthogonalize);
    get("d1_rounding", c.d1_rounding);
    get("d_list", c.d_list);
    get("alpha_grid", c.alpha_grid);
    get("seeds", c.seeds);
    get("n_test", c.n_test);
    get("degree", c.degree);
    get("ridge", c.ridge);
    get("solver", c.solver);
    get("parallelism", c.parallelism);
    get("output_dir", c.output_dir);
    get("memory_cap_elements", c.memory_cap_elements);
    get("measure_bulk_edge", c.measure_bulk_edge);
    get("record_timing", c.record_timing);
    get("keep_spectrum", c.keep_spectrum);
    return c;
}

std::string SweepConfig::config_hash() const {
    const std::string canonical = config_to_json_obj(*this, true).dump();
    std::uint64_t h = hash_label(canonical);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

Eigen::Index samples_for(int d, double alpha) {
    return static_cast<Eigen::Index>(
        std::floor(std::pow(static_cast<double>(d), alpha)));
}

void SweepConfig::validate() const {
    if (d_list.empty()) throw std::invalid_argument("sweep: empty d_list");
    if (alpha_grid.empty()) throw std::invalid_argument("sweep: empty alpha_grid");
    for (std::size_t i = 1; i < alpha_grid.size(); ++i) {
        if (alpha_grid[i] <= alpha_grid[i - 1]) {
            throw std::invalid_argument("sweep: alpha grid must be strictly increasing");
        }
    }
    if (seeds.empty()) throw std::invalid_argument("sweep: empty seed list");
    if (solver != "dense" && solver != "subspace") {
        throw std::invalid_argument("sweep: solver must be dense or subspace");
    }
    for (int d : d_list) {
        TeacherSpec ts;
        ts.d = d;
        ts.q = q;
        ts.epsilon = epsilon;
        ts.gamma = gamma;
        ts.readout = readout;
        ts.d1_rounding = parse_rounding(d1_rounding);
        ts.validate();  // throws on d1 < 1 etc.
        const std::uint64_t D = ts.feature_dim();
        if (D * D > memory_cap_elements * 4) {
            throw std::invalid_argument(
                "sweep: moment matrix for d=" + std::to_string(d) +
                " exceeds the memory cap");
        }
        for (double a : alpha_grid) {
            if (samples_for(d, a) < 1) {
                throw std::invalid_argument("sweep: derived n < 1");
            }
        }
    }
}

namespace {

TeacherSpec teacher_spec_for(const SweepConfig& config, const TrialCell& cell) {
    TeacherSpec ts;
    ts.d = cell.d;
    ts.q = config.q;
    ts.epsilon = config.epsilon;
    ts.gamma = config.gamma;
    ts.readout = config.readout;
    ts.direction_scale = parse_direction_scale(config.direction_scale);
    ts.fix_signs = config.fix_signs;
    ts.orthogonalize = config.orthogonalize;
    ts.d1_rounding = parse_rounding(config.d1_rounding);
    ts.seed = stream_seed(cell.seed, "teacher", static_cast<std::uint64_t>(cell.d));
    return ts;
}

struct TrialOutput {
    TrialResult result;
    std::optional<Eigen::VectorXd> full_spectrum;
};

TrialOutput run_trial_impl(const SweepConfig& config, const TrialCell& cell) {
    // one BLAS thread per trial: results stay bit-identical whether the cell
    // runs alone or inside a pool; parallelism comes from the pool itself
    set_blas_threads(1);
    const auto t0 = std::chrono::steady_clock::now();
    const TeacherSpec ts = teacher_spec_for(config, cell);
    const Teacher teacher = sample_teacher(ts);
    const Eigen::Index n = samples_for(cell.d, cell.alpha);
    const auto du = static_cast<std::uint64_t>(cell.d);
    const auto nu = static_cast<std::uint64_t>(n);

    FitOptions opts;
    opts.degree = config.degree;
    opts.ridge = config.ridge;
    opts.solver = config.solver == "subspace" ? EigenSolver::subspace
                                              : EigenSolver::dense;
    opts.keep_full_spectrum = config.keep_spectrum;

    SpectralFit fit_result;
    double edge = std::numeric_limits<double>::quiet_NaN();
    {
        const Dataset train = sample_dataset(
            teacher, n, stream_seed(cell.seed, "train", du, nu),
            config.memory_cap_elements);
        const Dataset readout_ds = sample_dataset(
            teacher, n, stream_seed(cell.seed, "readout", du, nu),
            config.memory_cap_elements);
        fit_result = fit(train, readout_ds,
                         TeacherDims{cell.d, config.q, teacher.d1()}, opts);
        if (config.measure_bulk_edge) {
            edge = bulk_edge_streaming(train.x, train.y, teacher.basis(),
                                       stream_seed(cell.seed, "permute", du, nu));
        }
    }

    const Eigen::Index n_test =
        config.n_test > 0
            ? config.n_test
            : std::max<Eigen::Index>(5000, 10 * teacher.d1() * teacher.d1());
    TrialResult r = evaluate_trial(fit_result, teacher, n_test,
                                   stream_seed(cell.seed, "test", du, nu));
    r.n = n;
    r.alpha = cell.alpha;
    r.seed = cell.seed;
    r.bulk_edge = edge;
    if (config.record_timing) {
        r.wall_time = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    }
    TrialOutput out;
    out.result = std::move(r);
    out.full_spectrum = std::move(fit_result.full_spectrum);
    return out;
}

std::string spectrum_file_name(const TrialCell& cell) {
    std::ostringstream os;
    os << "spectrum_d" << cell.d << "_alpha" << format_double(cell.alpha) << "_seed"
       << cell.seed << ".csv";
    return os.str();
}

}  // namespace

TrialResult run_trial(const SweepConfig& config, const TrialCell& cell) {
    return run_trial_impl(config, cell).result;
}

SweepOutcome run_sweep(const SweepConfig& config, bool resume) {
    config.validate();
    fs::create_directories(config.output_dir);
    const std::string partial_path =
        (fs::path(config.output_dir) / "results.partial.csv").string();
    const std::string results_path =
        (fs::path(config.output_dir) / "results.csv").string();
    const std::string manifest_path =
        (fs::path(config.output_dir) / "manifest.json").string();
    const std::string hash = config.config_hash();

    int d1_max = 1;
    for (int d : config.d_list) {
        TeacherSpec ts;
        ts.d = d;
        ts.q = config.q;
        ts.epsilon = config.epsilon;
        ts.d1_rounding = parse_rounding(config.d1_rounding);
        d1_max = std::max(d1_max, ts.d1());
    }

    std::vector<TrialCell> cells;
    for (int d : config.d_list) {
        for (double a : config.alpha_grid) {
            for (std::uint64_t s : config.seeds) cells.push_back({d, a, s});
        }
    }

    // resume: keep rows whose (d, n, seed) already completed under this hash
    std::map<std::tuple<int, long long, std::uint64_t>, std::string> done_rows;
    if (resume && fs::exists(partial_path) && fs::exists(manifest_path)) {
        const json manifest = json::parse(read_file(manifest_path));
        if (manifest.at("config_hash").get<std::string>() != hash) {
            throw std::invalid_argument("sweep resume: config hash mismatch");
        }
        std::ifstream in(partial_path);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string tok;
            std::getline(ss, tok, ',');
            const int d = std::stoi(tok);
            for (int skip = 0; skip < 3; ++skip) std::getline(ss, tok, ',');
            std::getline(ss, tok, ',');
            const long long nval = std::stoll(tok);
            std::getline(ss, tok, ',');  // alpha
            std::getline(ss, tok, ',');
            const std::uint64_t seed = std::stoull(tok);
            done_rows[{d, nval, seed}] = line;
        }
    }

    std::vector<TrialCell> todo;
    for (const auto& cell : cells) {
        const long long nval = samples_for(cell.d, cell.alpha);
        if (!done_rows.count({cell.d, nval, cell.seed})) todo.push_back(cell);
    }

    // heavy cells first for load balance; output order is canonicalized later
    std::vector<std::size_t> order(todo.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples_for(todo[a].d, todo[a].alpha) >
               samples_for(todo[b].d, todo[b].alpha);
    });

    int workers = config.parallelism;
    if (const char* env = std::getenv("HIERSPEC_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) workers = workers > 0 ? std::min(workers, cap) : cap;
    }
    if (workers <= 0) workers = std::min(hardware_threads(), 2);
    workers = std::max(1, std::min<int>(workers, static_cast<int>(todo.size() ? todo.size() : 1)));

    std::ofstream partial(partial_path,
                          resume && !done_rows.empty() ? std::ios::app : std::ios::trunc);
    if (!resume || done_rows.empty()) {
        partial << TrialResult::csv_header(d1_max) << "\n";
        partial.flush();
    }

    std::mutex mu;
    std::vector<std::pair<TrialCell, std::string>> rows;
    std::vector<TrialFailure> failures;
    std::atomic<std::size_t> next{0};

    const auto write_manifest = [&](const std::string& status) {
        json m;
        m["config_hash"] = hash;
        m["config"] = json::parse(config_to_json_obj(config, true).dump());
        m["status"] = status;
        m["completed"] = static_cast<int>(rows.size() + done_rows.size());
        m["total_cells"] = static_cast<int>(cells.size());
        json fj = json::array();
        for (const auto& f : failures) {
            fj.push_back({{"d", f.cell.d},
                          {"alpha", f.cell.alpha},
                          {"seed", f.cell.seed},
                          {"reason", f.reason}});
        }
        m["failures"] = fj;
        atomic_write_file(manifest_path, m.dump(2) + "\n");
    };

    {
        std::lock_guard<std::mutex> lock(mu);
        write_manifest("running");
    }

    const auto worker = [&]() {
        while (true) {
            const std::size_t pick = next.fetch_add(1);
            if (pick >= order.size()) return;
            const TrialCell cell = todo[order[pick]];
            try {
                TrialOutput out = run_trial_impl(config, cell);
                if (config.keep_spectrum && out.full_spectrum) {
                    std::ostringstream body;
                    body << "eigenvalue\n";
                    for (Eigen::Index i = 0; i < out.full_spectrum->size(); ++i) {
                        body << format_double((*out.full_spectrum)(i)) << "\n";
                    }
                    atomic_write_file((fs::path(config.output_dir) /
                                       spectrum_file_name(cell))
                                          .string(),
                                      body.str());
                }
                const std::string row = out.result.csv_row(d1_max);
                std::lock_guard<std::mutex> lock(mu);
                rows.emplace_back(cell, row);
                partial << row << "\n";
                partial.flush();
                write_manifest("running");
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                failures.push_back({cell, e.what()});
                write_manifest("running");
            }
        }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // canonical results file ordered by (d, alpha, seed)
    std::map<std::tuple<int, double, std::uint64_t>, std::string> ordered;
    for (const auto& [key, row] : done_rows) {
        // reparse alpha from the stored row (column 6)
        std::stringstream ss(row);
        std::string tok;
        for (int i = 0; i < 6; ++i) std::getline(ss, tok, ',');
        ordered[{std::get<0>(key), std::stod(tok), std::get<2>(key)}] = row;
    }
    for (const auto& [cell, row] : rows) {
        ordered[{cell.d, cell.alpha, cell.seed}] = row;
    }
    std::ostringstream body;
    body << TrialResult::csv_header(d1_max) << "\n";
    for (const auto& [key, row] : ordered) body << row << "\n";
    atomic_write_file(results_path, body.str());

    SweepOutcome outcome;
    outcome.results_path = results_path;
    outcome.manifest_path = manifest_path;
    outcome.failures = failures;
    outcome.completed = static_cast<int>(ordered.size());
    outcome.skipped_resume = static_cast<int>(done_rows.size());
    outcome.status = failures.empty() ? SweepStatus::all_ok : SweepStatus::partial;
    {
        std::lock_guard<std::mutex> lock(mu);
        write_manifest(failures.empty() ? "complete" : "partial");
    }
    return outcome;
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_results_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("read_results_csv: empty file");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() < 13) continue;
        ResultRow r;
        r.d = std::stoi(f[0]);
        r.q = std::stoi(f[1]);
        r.epsilon = std::stod(f[2]);
        r.gamma = std::stod(f[3]);
        r.n = std::stod(f[4]);
        r.alpha = std::stod(f[5]);
        r.seed = std::stoull(f[6]);
        r.readout = f[7];
        r.test_mse = std::stod(f[8]);
        r.feature_overlap = std::stod(f[9]);
        r.m_empirical = std::stoi(f[10]);
        r.bulk_edge = f[11] == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                     : std::stod(f[11]);
        r.wall_time = std::stod(f[12]);
        for (std::size_t i = 13; i < f.size(); ++i) {
            if (!f[i].empty()) r.cos2.push_back(std::stod(f[i]));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

FigureKind parse_figure_kind(const std::string& name) {
    if (name == "mse_vs_alpha") return FigureKind::mse_vs_alpha;
    if (name == "overlap_vs_alpha") return FigureKind::overlap_vs_alpha;
    if (name == "spectrum") return FigureKind::spectrum;
    if (name == "directionwise") return FigureKind::directionwise;
    if (name == "staircase") return FigureKind::staircase;
    if (name == "gamma_family") return FigureKind::gamma_family;
    throw std::invalid_argument("unknown figure '" + name + "'");
}

namespace {

struct CellAgg {
    std::vector<double> mse, overlap, m_emp;
    std::vector<std::vector<double>> cos2;  // per seed
    double n = 0.0;
    const ResultRow* sample = nullptr;
};

std::map<std::pair<double, double>, CellAgg> group_rows(
    const std::vector<ResultRow>& rows, bool by_gamma) {
    std::map<std::pair<double, double>, CellAgg> groups;
    for (const auto& r : rows) {
        const double key = by_gamma ? r.gamma : static_cast<double>(r.d);
        auto& g = groups[{key, r.alpha}];
        g.mse.push_back(r.test_mse);
        g.overlap.push_back(r.feature_overlap);
        g.m_emp.push_back(static_cast<double>(r.m_empirical));
        g.cos2.push_back(r.cos2);
        g.n = r.n;
        g.sample = &r;
    }
    return groups;
}

PredictorParams predictor_for(const ResultRow& r) {
    PredictorParams p;
    p.d = r.d;
    p.q = r.q;
    p.gamma = r.gamma;
    TeacherSpec ts;
    ts.d = r.d;
    ts.q = r.q;
    ts.epsilon = r.epsilon;
    p.d1 = ts.d1();
    return p;
}

std::string out_file(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

}  // namespace

std::vector<std::string> emit_figure_data(const std::string& results_csv,
                                          FigureKind figure, const std::string& out_dir,
                                          double c_thr, double c_mse) {
    const std::vector<ResultRow> rows = read_results_csv(results_csv);
    if (rows.empty()) throw std::runtime_error("emit_figure_data: no result rows");
    std::vector<std::string> written;

    if (figure == FigureKind::spectrum) {
        // pass-through of the per-cell spectrum exports next to the results
        const fs::path dir = fs::path(results_csv).parent_path();
        bool found = false;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("spectrum_", 0) == 0 && entry.path().extension() == ".csv") {
                const std::string dst = out_file(out_dir, "fig_" + name);
                fs::copy_file(entry.path(), dst, fs::copy_options::overwrite_existing);
                written.push_back(dst);
                found = true;
            }
        }
        if (!found) {
            throw std::runtime_error(
                "emit_figure_data: no spectrum_*.csv exports found; run the sweep "
                "with keep_spectrum");
        }
        return written;
    }

    const bool by_gamma = figure == FigureKind::gamma_family;
    const auto groups = group_rows(rows, by_gamma);

    if (figure == FigureKind::mse_vs_alpha || figure == FigureKind::overlap_vs_alpha ||
        figure == FigureKind::gamma_family) {
        std::ostringstream body;
        body << (by_gamma ? "gamma" : "d")
             << ",alpha,n,mse_mean,mse_q25,mse_q75,overlap_mean,overlap_q25,"
                "overlap_q75,theory_mse,theory_mse_in_window,m_th_over_d1\n";
        for (const auto& [key, agg] : groups) {
            PredictorParams p = predictor_for(*agg.sample);
            p.c_thr = c_thr;
            p.c_mse = c_mse;
            double theory = std::numeric_limits<double>::quiet_NaN();
            bool window = false;
            if (p.gamma != 0.5 && p.gamma > 0.0) {
                const MsePrediction mp = predicted_mse(agg.n, p);
                theory = mp.value;
                window = mp.in_window;
            }
            const double mth = static_cast<double>(predicted_count_staircase(agg.n, p));
            body << format_double(key.first) << ',' << format_double(key.second) << ','
                 << format_double(agg.n) << ',' << format_double(mean(agg.mse)) << ','
                 << format_double(quantile(agg.mse, 0.25)) << ','
                 << format_double(quantile(agg.mse, 0.75)) << ','
                 << format_double(mean(agg.overlap)) << ','
                 << format_double(quantile(agg.overlap, 0.25)) << ','
                 << format_double(quantile(agg.overlap, 0.75)) << ','
                 << format_double(theory) << ',' << (window ? 1 : 0) << ','
                 << format_double(mth / p.d1) << "\n";
        }
        const char* name = figure == FigureKind::mse_vs_alpha ? "fig_mse_vs_alpha.csv"
                           : figure == FigureKind::overlap_vs_alpha
                               ? "fig_overlap_vs_alpha.csv"
                               : "fig_gamma_family.csv";
        const std::string dst = out_file(out_dir, name);
        atomic_write_file(dst, body.str());
        written.push_back(dst);
        return written;
    }

    if (figure == FigureKind::staircase) {
        std::ostringstream body;
        body << "d,alpha,n,m_emp_mean,m_emp_q25,m_emp_q75,m_th\n";
        for (const auto& [key, agg] : groups) {
            PredictorParams p = predictor_for(*agg.sample);
            p.c_thr = c_thr;
            body << format_double(key.first) << ',' << format_double(key.second) << ','
                 << format_double(agg.n) << ',' << format_double(mean(agg.m_emp)) << ','
                 << format_double(quantile(agg.m_emp, 0.25)) << ','
                 << format_double(quantile(agg.m_emp, 0.75)) << ','
                 << predicted_count_staircase(agg.n, p) << "\n";
        }
        const std::string dst = out_file(out_dir, "fig_staircase.csv");
        atomic_write_file(dst, body.str());
        written.push_back(dst);
        return written;
    }

    // directionwise: tracked directions from the appendix protocol,
    // truncated to d1
    if (rows.front().cos2.empty()) {
        throw std::runtime_error("emit_figure_data: results carry no cos2 columns");
    }
    const std::vector<int> tracked_all = {1, 3, 5, 8, 12, 15, 18, 20};
    const int d1 = static_cast<int>(rows.front().cos2.size());
    std::vector<int> tracked;
    for (int i : tracked_all) {
        if (i <= d1) tracked.push_back(i);
    }
    std::ostringstream body;
    body << "d,alpha,n";
    for (int i : tracked) body << ",cos2_" << i << "_mean,err_" << i << "_mean";
    body << ",inv_n_guide\n";
    for (const auto& [key, agg] : groups) {
        body << format_double(key.first) << ',' << format_double(key.second) << ','
             << format_double(agg.n);
        for (int i : tracked) {
            std::vector<double> c, e;
            for (const auto& seed_cos : agg.cos2) {
                if (static_cast<int>(seed_cos.size()) >= i) {
                    const double v = seed_cos[static_cast<std::size_t>(i - 1)];
                    c.push_back(v);
                    e.push_back(1.0 - std::sqrt(std::max(0.0, v)));
                }
            }
            body << ',' << format_double(c.empty() ? 0.0 : mean(c)) << ','
                 << format_double(e.empty() ? 0.0 : mean(e));
        }
        body << ',' << format_double(1.0 / agg.n) << "\n";
    }
    const std::string dst = out_file(out_dir, "fig_directionwise.csv");
    atomic_write_file(dst, body.str());
    written.push_back(dst);
    return written;
}

}  // namespace hierspec
