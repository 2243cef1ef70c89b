#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hierspec {

enum class ReadoutKind { identity, tanh, polynomial };

// The scalar link g applied to the second-layer feature. Polynomial readouts
// are given by monomial coefficients and centered at construction so that
// E[g(Z)] = 0 under Z ~ N(0,1); identity and tanh are odd, hence centered
// already.
class Readout {
public:
    static Readout make_identity();
    static Readout make_tanh();
    static Readout make_polynomial(std::vector<double> coeffs);
    static Readout parse(const std::string& text);  // "identity", "tanh", "poly:a0,a1,..."

    double operator()(double t) const;
    void apply(const Eigen::VectorXd& in, Eigen::VectorXd& out) const;

    double derivative(double t) const;

    // E[g(Z)] and nu_1 = E[g(Z) Z] = E[g'(Z)], computed by quadrature at
    // construction. |nu_1| bounded away from zero is the information
    // exponent one condition the recovery theory needs.
    double mean() const { return mean_; }
    double nu1() const { return nu1_; }
    bool information_exponent_one(double tol = 1e-8) const {
        return std::abs(nu1_) > tol;
    }

    ReadoutKind kind() const { return kind_; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    std::string name() const;

private:
    Readout(ReadoutKind kind, std::vector<double> coeffs);

    ReadoutKind kind_;
    std::vector<double> coeffs_;  // monomial coefficients (polynomial only)
    double mean_ = 0.0;
    double nu1_ = 1.0;
};

}  // namespace hierspec
