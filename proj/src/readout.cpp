#include "hierspec/readout.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hierspec/numerics.hpp"

namespace hierspec {

namespace {
double poly_eval(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
    return v;
}
}  // namespace

Readout::Readout(ReadoutKind kind, std::vector<double> coeffs)
    : kind_(kind), coeffs_(std::move(coeffs)) {
    if (kind_ == ReadoutKind::polynomial) {
        if (coeffs_.empty()) {
            throw std::invalid_argument("Readout: polynomial needs coefficients");
        }
        const double raw_mean = adaptive_gaussian_expectation(
            [this](double t) { return poly_eval(coeffs_, t); }, 1e-12);
        coeffs_[0] -= raw_mean;  // center
    }
    mean_ = adaptive_gaussian_expectation([this](double t) { return (*this)(t); },
                                          1e-12);
    nu1_ = adaptive_gaussian_expectation(
        [this](double t) { return (*this)(t)*t; }, 1e-12);
}

Readout Readout::make_identity() { return Readout(ReadoutKind::identity, {}); }
Readout Readout::make_tanh() { return Readout(ReadoutKind::tanh, {}); }
Readout Readout::make_polynomial(std::vector<double> coeffs) {
    return Readout(ReadoutKind::polynomial, std::move(coeffs));
}

Readout Readout::parse(const std::string& text) {
    if (text == "identity" || text == "id") return make_identity();
    if (text == "tanh") return make_tanh();
    if (text.rfind("poly:", 0) == 0) {
        std::vector<double> coeffs;
        std::stringstream ss(text.substr(5));
        std::string tok;
        while (std::getline(ss, tok, ',')) coeffs.push_back(std::stod(tok));
        return make_polynomial(std::move(coeffs));
    }
    throw std::invalid_argument("Readout::parse: unknown readout '" + text + "'");
}

double Readout::operator()(double t) const {
    switch (kind_) {
        case ReadoutKind::identity: return t;
        case ReadoutKind::tanh: return std::tanh(t);
        case ReadoutKind::polynomial: return poly_eval(coeffs_, t);
    }
    return t;
}

void Readout::apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
    out.resize(in.size());
    switch (kind_) {
        case ReadoutKind::identity: out = in; return;
        case ReadoutKind::tanh: out = in.array().tanh(); return;
        case ReadoutKind::polynomial:
            for (Eigen::Index i = 0; i < in.size(); ++i) out(i) = poly_eval(coeffs_, in(i));
            return;
    }
}

double Readout::derivative(double t) const {
    switch (kind_) {
        case ReadoutKind::identity: return 1.0;
        case ReadoutKind::tanh: {
            const double c = std::cosh(t);
            return 1.0 / (c * c);
        }
        case ReadoutKind::polynomial: {
            double v = 0.0;
            for (std::size_t i = coeffs_.size(); i-- > 1;) {
                v = v * t + coeffs_[i] * static_cast<double>(i);
            }
            return v;
        }
    }
    return 1.0;
}

std::string Readout::name() const {
    switch (kind_) {
        case ReadoutKind::identity: return "identity";
        case ReadoutKind::tanh: return "tanh";
        case ReadoutKind::polynomial: {
            std::string s = "poly:";
            for (std::size_t i = 0; i < coeffs_.size(); ++i) {
                if (i) s += ',';
                std::ostringstream os;
                os << coeffs_[i];
                s += os.str();
            }
            return s;
        }
    }
    return "identity";
}

}  // namespace hierspec
