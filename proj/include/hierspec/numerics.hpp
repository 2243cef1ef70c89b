#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace hierspec {

// Gauss-Hermite rule for the standard normal weight: E[f(Z)] ~ sum w_i f(x_i).
// Weights sum to 1. Tables are cached per node count (thread-safe).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const QuadratureRule& gauss_hermite_rule(int n);

double gauss_hermite_expectation(const std::function<double(double)>& f, int n);

// E[f(Z)] with node doubling from n0 until two successive estimates agree to
// `tol`; throws std::runtime_error if not converged by n_max.
double adaptive_gaussian_expectation(const std::function<double(double)>& f,
                                     double tol = 1e-10, int n0 = 64,
                                     int n_max = 1024);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

// Least-squares line through (x_i, y_i); slope_stderr from the residuals.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation (average ranks on ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Linear-interpolation quantile of a copy of v, q in [0, 1].
double quantile(std::vector<double> v, double q);

double mean(const std::vector<double>& v);

// Standard error of the mean.
double std_error(const std::vector<double>& v);

}  // namespace hierspec
