#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace egren {

struct QuadratureConfig {
    double rel_tol = 1e-8;  // relative to the integral of |f|
    double abs_tol = 1e-300;
    int max_depth = 40;
    int max_intervals = 4000;
    int sphere_order = 6;  // Gauss points per polar angle on S^{k-1}, k >= 3
    int box_order = 8;     // Gauss points per axis for fixed Cartesian rules
    int fixed_above_dim = 2;  // blocks of larger dimension use fixed angular rules
    int radial_fixed_order = 0;  // > 0: fixed Gauss rule on each (graded) radial piece, no error estimate
};

// An integral estimate: value, absolute error, and the integral of |f| used as
// the scale for relative tolerances.
struct Estimate {
    double value = 0.0;
    double error = 0.0;
    double magnitude = 0.0;
    bool converged = true;

    Estimate& operator+=(const Estimate& o) {
        value += o.value;
        error += o.error;
        magnitude += o.magnitude;
        converged = converged && o.converged;
        return *this;
    }
    Estimate scaled(double s) const {
        const double a = s < 0 ? -s : s;
        return {value * s, error * a, magnitude * a, converged};
    }
};

// Global adaptive Gauss-Kronrod (7/15). The integrand may itself be an
// estimate (nested integration); its errors are integrated into the result.
Estimate integrate(const std::function<Estimate(double)>& f, double a, double b, const QuadratureConfig& cfg);
Estimate integrate(const std::function<double(double)>& f, double a, double b, const QuadratureConfig& cfg);

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct FixedRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const FixedRule& gauss_legendre(int n);

// Product rule on the unit sphere S^{k-1} in R^k (k >= 2); weights sum to the
// sphere area.
struct SphereRule {
    std::vector<Eigen::VectorXd> directions;
    std::vector<double> weights;
};
const SphereRule& sphere_rule(int k, int order);

double sphere_area(int k);  // area of S^{k-1}

}  // namespace egren
