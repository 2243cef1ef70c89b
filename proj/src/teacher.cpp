#include "hierspec/teacher.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "hierspec/io.hpp"
#include "hierspec/sym_tensor.hpp"

namespace hierspec {

using nlohmann::json;

DirectionScale parse_direction_scale(const std::string& s) {
    if (s == "unit-norm-rows") return DirectionScale::unit_norm_rows;
    if (s == "entry-variance-dq") return DirectionScale::entry_variance_dq;
    if (s == "entry-variance-D") return DirectionScale::entry_variance_D;
    throw std::invalid_argument("unknown direction scale '" + s + "'");
}

Rounding parse_rounding(const std::string& s) {
    if (s == "floor") return Rounding::floor;
    if (s == "round") return Rounding::round;
    if (s == "ceil") return Rounding::ceil;
    throw std::invalid_argument("unknown rounding mode '" + s + "'");
}

namespace {
std::string direction_scale_name(DirectionScale v) {
    switch (v) {
        case DirectionScale::unit_norm_rows: return "unit-norm-rows";
        case DirectionScale::entry_variance_dq: return "entry-variance-dq";
        case DirectionScale::entry_variance_D: return "entry-variance-D";
    }
    return "unit-norm-rows";
}
std::string rounding_name(Rounding v) {
    switch (v) {
        case Rounding::floor: return "floor";
        case Rounding::round: return "round";
        case Rounding::ceil: return "ceil";
    }
    return "floor";
}
}  // namespace

int TeacherSpec::d1() const {
    const double raw = std::pow(static_cast<double>(d), epsilon);
    double v = 0.0;
    switch (d1_rounding) {
        case Rounding::floor: v = std::floor(raw); break;
        case Rounding::round: v = std::round(raw); break;
        case Rounding::ceil: v = std::ceil(raw); break;
    }
    return static_cast<int>(v);
}

std::vector<std::string> TeacherSpec::validate() const {
    if (d < 1) throw std::invalid_argument("TeacherSpec: d >= 1 required");
    if (q < 1) throw std::invalid_argument("TeacherSpec: q >= 1 required");
    if (epsilon <= 0.0) throw std::invalid_argument("TeacherSpec: epsilon > 0 required");
    if (gamma < 0.0) throw std::invalid_argument("TeacherSpec: gamma >= 0 required");
    if (d1() < 1) throw std::invalid_argument("TeacherSpec: d1 = floor(d^epsilon) < 1");
    feature_dim();  // throws on overflow

    std::vector<std::string> warnings;
    if (epsilon >= q / 2.0) {
        warnings.push_back("epsilon >= q/2: outside the recovery theorem's range");
    }
    if (gamma < 0.5 && gamma > 0.0 && epsilon >= q / (1.0 - 2.0 * gamma)) {
        warnings.push_back("epsilon >= q/(1-2gamma): outside the nonlinear regime range");
    }
    const Readout g = Readout::parse(readout);
    if (std::abs(g.mean()) > 1e-8) {
        warnings.push_back("readout is not centered: E[g(Z)] != 0");
    }
    if (!g.information_exponent_one()) {
        warnings.push_back("readout has information exponent > 1: E[g'(Z)] = 0");
    }
    return warnings;
}

double normalization_constant(int d1, double gamma) {
    if (d1 < 1) throw std::invalid_argument("normalization_constant: d1 >= 1");
    if (gamma < 0.0) throw std::invalid_argument("normalization_constant: gamma >= 0");
    double s = 0.0;
    for (int i = 1; i <= d1; ++i) s += std::pow(static_cast<double>(i), -2.0 * gamma);
    return 1.0 / std::sqrt(s);
}

Teacher sample_teacher(const TeacherSpec& spec) {
    spec.validate();
    const int d1 = spec.d1();
    const Eigen::Index D = static_cast<Eigen::Index>(spec.feature_dim());

    Teacher t;
    t.spec = spec;
    t.basis_ = basis_cache(spec.d, spec.q);
    t.g = Readout::parse(spec.readout);

    Rng rng(stream_seed(spec.seed, "teacher"));
    t.a1.resize(d1, D);
    for (int i = 0; i < d1; ++i) {
        for (Eigen::Index j = 0; j < D; ++j) t.a1(i, j) = rng.gaussian();
    }
    switch (spec.direction_scale) {
        case DirectionScale::unit_norm_rows:
            for (int i = 0; i < d1; ++i) t.a1.row(i).normalize();
            break;
        case DirectionScale::entry_variance_dq:
            t.a1 *= std::pow(static_cast<double>(spec.d), -0.5 * spec.q);
            break;
        case DirectionScale::entry_variance_D:
            t.a1 /= std::sqrt(static_cast<double>(D));
            break;
    }
    if (spec.orthogonalize) {
        // Gram-Schmidt on the rows; norms are restored only in the
        // unit-norm convention
        for (int i = 0; i < d1; ++i) {
            for (int j = 0; j < i; ++j) {
                const double proj = t.a1.row(i).dot(t.a1.row(j)) /
                                    t.a1.row(j).squaredNorm();
                t.a1.row(i) -= proj * t.a1.row(j);
            }
            if (spec.direction_scale == DirectionScale::unit_norm_rows) {
                t.a1.row(i).normalize();
            }
        }
    }

    t.z.resize(static_cast<std::size_t>(d1));
    for (int i = 0; i < d1; ++i) {
        t.z[static_cast<std::size_t>(i)] = spec.fix_signs ? 1 : rng.rademacher();
    }
    t.z_gamma = normalization_constant(d1, spec.gamma);
    t.lambdas.resize(d1);
    for (int i = 0; i < d1; ++i) {
        t.lambdas(i) = t.z_gamma * t.z[static_cast<std::size_t>(i)] *
                       std::pow(static_cast<double>(i + 1), -spec.gamma);
    }
    return t;
}

Eigen::VectorXd Teacher::latent_first(const Eigen::VectorXd& f) const {
    if (f.size() != a1.cols()) {
        throw std::invalid_argument("latent_first: dimension mismatch");
    }
    return a1 * f;
}

double Teacher::latent_second(const Eigen::VectorXd& h1) const {
    if (h1.size() != lambdas.size()) {
        throw std::invalid_argument("latent_second: dimension mismatch");
    }
    return (lambdas.array() * (h1.array().square() - 1.0)).sum() / std::sqrt(2.0);
}

double Teacher::label(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd f = hermite_feature_vector(x, basis());
    return g(latent_second(latent_first(f)));
}

namespace {
constexpr Eigen::Index kChunk = 4096;
}

Eigen::MatrixXd Teacher::latents_batch(const Eigen::MatrixXd& x) const {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd h1(n, d1());
    Eigen::MatrixXd feats;
    for (Eigen::Index start = 0; start < n; start += kChunk) {
        const Eigen::Index m = std::min(kChunk, n - start);
        hermite_feature_cols(x.middleRows(start, m), basis(), feats);
        h1.middleRows(start, m).noalias() = feats.transpose() * a1.transpose();
    }
    return h1;
}

Eigen::VectorXd Teacher::label_batch(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd h1 = latents_batch(x);
    Eigen::VectorXd h2(h1.rows());
    for (Eigen::Index mu = 0; mu < h1.rows(); ++mu) {
        h2(mu) = (lambdas.array() * (h1.row(mu).transpose().array().square() - 1.0))
                     .sum() /
                 std::sqrt(2.0);
    }
    Eigen::VectorXd y;
    g.apply(h2, y);
    return y;
}

Dataset sample_dataset(const Teacher& teacher, Eigen::Index n, std::uint64_t seed,
                       std::uint64_t max_elements) {
    if (n < 1) throw std::invalid_argument("sample_dataset: n >= 1 required");
    const auto elements = static_cast<std::uint64_t>(n) *
                          static_cast<std::uint64_t>(teacher.spec.d);
    if (elements > max_elements) {
        throw std::length_error("sample_dataset: n*d exceeds the memory cap");
    }
    Dataset ds;
    ds.x.resize(n, teacher.spec.d);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < teacher.spec.d; ++j) ds.x(i, j) = rng.gaussian();
    }
    ds.y = teacher.label_batch(ds.x);
    return ds;
}

std::string Teacher::to_json() const {
    json j;
    j["spec"] = {{"d", spec.d},
                 {"q", spec.q},
                 {"epsilon", spec.epsilon},
                 {"gamma", spec.gamma},
                 {"readout", spec.readout},
                 {"direction_scale", direction_scale_name(spec.direction_scale)},
                 {"fix_signs", spec.fix_signs},
                 {"orthogonalize", spec.orthogonalize},
                 {"d1_rounding", rounding_name(spec.d1_rounding)},
                 {"seed", spec.seed}};
    j["z"] = z;
    j["z_gamma"] = z_gamma;
    j["d1"] = d1();
    j["feature_dim"] = a1.cols();
    j["a1"] = matrix_to_base64(a1);
    return j.dump(2);
}

Teacher Teacher::from_json(const std::string& text) {
    const json j = json::parse(text);
    TeacherSpec spec;
    const auto& s = j.at("spec");
    spec.d = s.at("d").get<int>();
    spec.q = s.at("q").get<int>();
    spec.epsilon = s.at("epsilon").get<double>();
    spec.gamma = s.at("gamma").get<double>();
    spec.readout = s.at("readout").get<std::string>();
    spec.direction_scale = parse_direction_scale(s.at("direction_scale").get<std::string>());
    spec.fix_signs = s.at("fix_signs").get<bool>();
    spec.orthogonalize = s.at("orthogonalize").get<bool>();
    spec.d1_rounding = parse_rounding(s.at("d1_rounding").get<std::string>());
    spec.seed = s.at("seed").get<std::uint64_t>();

    Teacher t;
    t.spec = spec;
    t.basis_ = basis_cache(spec.d, spec.q);
    t.g = Readout::parse(spec.readout);
    t.z = j.at("z").get<std::vector<int>>();
    t.z_gamma = j.at("z_gamma").get<double>();
    const auto rows = j.at("d1").get<Eigen::Index>();
    const auto cols = j.at("feature_dim").get<Eigen::Index>();
    t.a1 = matrix_from_base64(j.at("a1").get<std::string>(), rows, cols);
    t.lambdas.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        t.lambdas(i) = t.z_gamma * t.z[static_cast<std::size_t>(i)] *
                       std::pow(static_cast<double>(i + 1), -spec.gamma);
    }
    return t;
}

}  // namespace hierspec
