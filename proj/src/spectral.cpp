#include "hierspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hierspec/hermite.hpp"
#include "hierspec/io.hpp"
#include "hierspec/sym_tensor.hpp"

namespace hierspec {

using nlohmann::json;

Eigen::MatrixXd moment_matrix(const Eigen::MatrixXd& features,
                              const Eigen::VectorXd& y) {
    const Eigen::Index n = features.rows();
    if (n != y.size() || n < 1) {
        throw std::invalid_argument("moment_matrix: rows(features) == length(y) >= 1");
    }
    WeightedGram gram(features.cols());
    constexpr Eigen::Index kChunk = 4096;
    for (Eigen::Index start = 0; start < n; start += kChunk) {
        const Eigen::Index m = std::min(kChunk, n - start);
        gram.accumulate(features.middleRows(start, m).transpose(),
                        y.segment(start, m));
    }
    Eigen::MatrixXd c = gram.take();
    c.diagonal().array() -= y.sum();
    c /= static_cast<double>(n) * std::sqrt(2.0);
    return c;
}

Eigen::MatrixXd moment_matrix_streaming(const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& y,
                                        const MultiIndexBasis& basis,
                                        Eigen::Index chunk) {
    const Eigen::Index n = x.rows();
    if (n != y.size() || n < 1) {
        throw std::invalid_argument("moment_matrix_streaming: shape mismatch");
    }
    WeightedGram gram(static_cast<Eigen::Index>(basis.size()));
    Eigen::MatrixXd feats;
    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index m = std::min(chunk, n - start);
        hermite_feature_cols(x.middleRows(start, m), basis, feats);
        gram.accumulate(feats, y.segment(start, m));
    }
    Eigen::MatrixXd c = gram.take();
    c.diagonal().array() -= y.sum();
    c /= static_cast<double>(n) * std::sqrt(2.0);
    return c;
}

namespace {

void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best) {
            best = a;
            imax = i;
        }
    }
    if (v(imax) < 0.0) v = -v;
}

TopDirections select_by_abs(const Eigen::VectorXd& values,
                            const Eigen::MatrixXd& vectors, int k) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(values(a)) > std::abs(values(b));
    });
    TopDirections out;
    out.values.resize(k);
    out.vectors.resize(vectors.rows(), k);
    for (int j = 0; j < k; ++j) {
        const Eigen::Index idx = order[static_cast<std::size_t>(j)];
        out.values(j) = values(idx);
        out.vectors.col(j) = vectors.col(idx);
        canonicalize_sign(out.vectors.col(j));
    }
    return out;
}

}  // namespace

TopDirections top_directions(const Eigen::MatrixXd& c_hat, int k, EigenSolver solver) {
    if (k < 1 || k > c_hat.rows()) {
        throw std::invalid_argument("top_directions: need 1 <= k <= D");
    }
    if (solver == EigenSolver::subspace) {
        const EigPairs pairs = eig_symmetric_topk_subspace(c_hat, k);
        return select_by_abs(pairs.values, pairs.vectors, k);
    }
    const EigPairs pairs = eig_symmetric_full(c_hat);
    return select_by_abs(pairs.values, pairs.vectors, k);
}

Eigen::MatrixXd first_layer_features(const Eigen::MatrixXd& u_hat,
                                     const Eigen::MatrixXd& features) {
    if (features.cols() != u_hat.rows()) {
        throw std::invalid_argument("first_layer_features: dimension mismatch");
    }
    return features * u_hat;
}

Eigen::MatrixXd second_layer_estimate(const Eigen::MatrixXd& h1_hat,
                                      const Eigen::VectorXd& y) {
    const Eigen::Index n = h1_hat.rows();
    if (n != y.size() || n < 1) {
        throw std::invalid_argument("second_layer_estimate: shape mismatch");
    }
    WeightedGram gram(h1_hat.cols());
    constexpr Eigen::Index kChunk = 8192;
    for (Eigen::Index start = 0; start < n; start += kChunk) {
        const Eigen::Index m = std::min(kChunk, n - start);
        gram.accumulate(h1_hat.middleRows(start, m).transpose(), y.segment(start, m));
    }
    Eigen::MatrixXd a2 = gram.take();
    a2.diagonal().array() -= y.sum();
    a2 /= static_cast<double>(n) * std::sqrt(2.0);
    return a2;
}

double scalar_feature(const Eigen::MatrixXd& a2_hat, const Eigen::VectorXd& h1_row) {
    if (a2_hat.rows() != a2_hat.cols() || a2_hat.rows() != h1_row.size()) {
        throw std::invalid_argument("scalar_feature: dimension mismatch");
    }
    return (h1_row.dot(a2_hat * h1_row) - a2_hat.trace()) / std::sqrt(2.0);
}

Eigen::VectorXd scalar_feature_batch(const Eigen::MatrixXd& a2_hat,
                                     const Eigen::MatrixXd& h1_rows) {
    const Eigen::MatrixXd prod = h1_rows * a2_hat;
    Eigen::VectorXd out(h1_rows.rows());
    const double tr = a2_hat.trace();
    for (Eigen::Index i = 0; i < h1_rows.rows(); ++i) {
        out(i) = (prod.row(i).dot(h1_rows.row(i)) - tr) / std::sqrt(2.0);
    }
    return out;
}

double ReadoutModel::evaluate(double h2) const {
    const double t = (h2 - center) / scale;
    double v = 0.0;
    for (Eigen::Index i = coefficients.size(); i-- > 0;) {
        v = v * t + coefficients(i);
    }
    return v;
}

ReadoutModel fit_readout(const Eigen::VectorXd& h2, const Eigen::VectorXd& y,
                         int degree, double ridge) {
    const Eigen::Index m = h2.size();
    if (degree < 0 || m != y.size() || m < degree + 1) {
        throw std::invalid_argument("fit_readout: need m >= degree+1 samples");
    }
    if (ridge < 0.0) throw std::invalid_argument("fit_readout: ridge >= 0");

    ReadoutModel model;
    model.degree = degree;
    model.ridge = ridge;
    model.center = h2.mean();
    const double var =
        (h2.array() - model.center).square().sum() / static_cast<double>(m);
    model.scale = var > 0.0 ? std::sqrt(var) : 1.0;

    const int p = degree + 1;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd phi(p);
    for (Eigen::Index mu = 0; mu < m; ++mu) {
        const double t = (h2(mu) - model.center) / model.scale;
        phi(0) = 1.0;
        for (int j = 1; j < p; ++j) phi(j) = phi(j - 1) * t;
        gram.selfadjointView<Eigen::Lower>().rankUpdate(phi, 1.0);
        rhs += y(mu) * phi;
    }
    gram.triangularView<Eigen::StrictlyUpper>() =
        gram.triangularView<Eigen::StrictlyLower>().transpose();
    gram /= static_cast<double>(m);
    rhs /= static_cast<double>(m);

    Eigen::MatrixXd system = gram;
    for (int j = 1; j < p; ++j) system(j, j) += ridge;  // intercept unpenalized

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(system);
    if (ridge == 0.0 && qr.rank() < p) {
        throw std::runtime_error("fit_readout: rank-deficient system with ridge = 0");
    }
    model.coefficients = qr.solve(rhs);
    return model;
}

SpectralFit fit_with_directions(Eigen::MatrixXd u_hat, const Dataset& train,
                                const Dataset& readout_data, const TeacherDims& dims,
                                const FitOptions& options) {
    SpectralFit out;
    out.d = dims.d;
    out.q = dims.q;
    out.d1 = dims.d1;
    out.basis = basis_cache(dims.d, dims.q);
    out.u_hat = std::move(u_hat);

    const Eigen::Index n = train.n();
    Eigen::MatrixXd feats;

    // A_hat^(2) from the training batch
    {
        WeightedGram gram(out.d1);
        for (Eigen::Index start = 0; start < n; start += options.chunk) {
            const Eigen::Index m = std::min(options.chunk, n - start);
            hermite_feature_cols(train.x.middleRows(start, m), *out.basis, feats);
            const Eigen::MatrixXd h1 = out.u_hat.transpose() * feats;  // d1 x m
            gram.accumulate(h1, train.y.segment(start, m));
        }
        out.a2_hat = gram.take();
        out.a2_hat.diagonal().array() -= train.y.sum();
        out.a2_hat /= static_cast<double>(n) * std::sqrt(2.0);
    }

    // scalar features on the fresh batch, then the ridge readout
    {
        const Eigen::Index nr = readout_data.n();
        Eigen::VectorXd h2(nr);
        const double tr = out.a2_hat.trace();
        for (Eigen::Index start = 0; start < nr; start += options.chunk) {
            const Eigen::Index m = std::min(options.chunk, nr - start);
            hermite_feature_cols(readout_data.x.middleRows(start, m), *out.basis, feats);
            const Eigen::MatrixXd h1 = out.u_hat.transpose() * feats;  // d1 x m
            const Eigen::MatrixXd ah = out.a2_hat * h1;
            for (Eigen::Index j = 0; j < m; ++j) {
                h2(start + j) = (h1.col(j).dot(ah.col(j)) - tr) / std::sqrt(2.0);
            }
        }
        out.readout = fit_readout(h2, readout_data.y, options.degree, options.ridge);
    }
    return out;
}

SpectralFit fit(const Dataset& train, const Dataset& readout_data,
                const TeacherDims& dims, const FitOptions& options) {
    const std::uint64_t D = basis_size(dims.d, dims.q);
    if (dims.d1 < 1 || static_cast<std::uint64_t>(dims.d1) > D) {
        throw std::invalid_argument("fit: need 1 <= d1 <= D");
    }
    if (train.x.cols() != dims.d || readout_data.x.cols() != dims.d) {
        throw std::invalid_argument("fit: dataset dimension != d");
    }

    const auto basis = basis_cache(dims.d, dims.q);
    Eigen::MatrixXd c_hat =
        moment_matrix_streaming(train.x, train.y, *basis, options.chunk);

    // At finite d the moment matrix carries a near-uniform diagonal
    // component of size Theta(|sum_j lambda_j| / d) coming from the fourth
    // moments of the Hermite features; it shifts the whole noise bulk off
    // zero and breaks absolute-eigenvalue selection long before it is
    // asymptotically negligible. Removing the mean eigenvalue recenters the
    // bulk and leaves every eigenvector unchanged.
    c_hat.diagonal().array() -= c_hat.trace() / static_cast<double>(c_hat.rows());

    std::optional<Eigen::VectorXd> spectrum;
    TopDirections top;
    if (options.solver == EigenSolver::dense) {
        const EigPairs pairs = eig_symmetric_full(c_hat);
        if (options.keep_full_spectrum) spectrum = pairs.values;
        top = select_by_abs(pairs.values, pairs.vectors, dims.d1);
    } else {
        top = top_directions(c_hat, dims.d1, options.solver);
        if (options.keep_full_spectrum) spectrum = eig_symmetric_values(c_hat);
    }

    SpectralFit out =
        fit_with_directions(std::move(top.vectors), train, readout_data, dims, options);
    out.eigvals = top.values;
    out.full_spectrum = std::move(spectrum);
    return out;
}

double predict(const SpectralFit& fit, const Eigen::VectorXd& x) {
    const Eigen::VectorXd f = hermite_feature_vector(x, *fit.basis);
    const Eigen::VectorXd h1 = fit.u_hat.transpose() * f;
    return fit.readout.evaluate(scalar_feature(fit.a2_hat, h1));
}

Eigen::VectorXd predict_batch(const SpectralFit& fit, const Eigen::MatrixXd& x,
                              Eigen::Index chunk) {
    const Eigen::Index n = x.rows();
    Eigen::VectorXd out(n);
    Eigen::MatrixXd feats;
    const double tr = fit.a2_hat.trace();
    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index m = std::min(chunk, n - start);
        hermite_feature_cols(x.middleRows(start, m), *fit.basis, feats);
        const Eigen::MatrixXd h1 = fit.u_hat.transpose() * feats;
        const Eigen::MatrixXd ah = fit.a2_hat * h1;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double h2 = (h1.col(j).dot(ah.col(j)) - tr) / std::sqrt(2.0);
            out(start + j) = fit.readout.evaluate(h2);
        }
    }
    return out;
}

std::string SpectralFit::to_json() const {
    json j;
    j["d"] = d;
    j["q"] = q;
    j["d1"] = d1;
    j["eigvals"] = std::vector<double>(eigvals.data(), eigvals.data() + eigvals.size());
    j["u_hat"] = matrix_to_base64(u_hat);
    j["a2_hat"] = matrix_to_base64(a2_hat);
    j["readout"] = {{"degree", readout.degree},
                    {"ridge", readout.ridge},
                    {"center", readout.center},
                    {"scale", readout.scale},
                    {"coefficients",
                     std::vector<double>(readout.coefficients.data(),
                                         readout.coefficients.data() +
                                             readout.coefficients.size())}};
    if (full_spectrum) {
        j["full_spectrum"] = std::vector<double>(
            full_spectrum->data(), full_spectrum->data() + full_spectrum->size());
    }
    return j.dump(2);
}

SpectralFit SpectralFit::from_json(const std::string& text) {
    const json j = json::parse(text);
    SpectralFit fit;
    fit.d = j.at("d").get<int>();
    fit.q = j.at("q").get<int>();
    fit.d1 = j.at("d1").get<int>();
    fit.basis = basis_cache(fit.d, fit.q);
    const auto ev = j.at("eigvals").get<std::vector<double>>();
    fit.eigvals = Eigen::Map<const Eigen::VectorXd>(ev.data(),
                                                    static_cast<Eigen::Index>(ev.size()));
    const Eigen::Index D = static_cast<Eigen::Index>(basis_size(fit.d, fit.q));
    fit.u_hat = matrix_from_base64(j.at("u_hat").get<std::string>(), D, fit.d1);
    fit.a2_hat = matrix_from_base64(j.at("a2_hat").get<std::string>(), fit.d1, fit.d1);
    const auto& r = j.at("readout");
    fit.readout.degree = r.at("degree").get<int>();
    fit.readout.ridge = r.at("ridge").get<double>();
    fit.readout.center = r.at("center").get<double>();
    fit.readout.scale = r.at("scale").get<double>();
    const auto coeffs = r.at("coefficients").get<std::vector<double>>();
    fit.readout.coefficients = Eigen::Map<const Eigen::VectorXd>(
        coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    if (j.contains("full_spectrum")) {
        const auto fs = j.at("full_spectrum").get<std::vector<double>>();
        fit.full_spectrum = Eigen::Map<const Eigen::VectorXd>(
            fs.data(), static_cast<Eigen::Index>(fs.size()));
    }
    return fit;
}

}  // namespace hierspec
