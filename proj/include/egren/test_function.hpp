#pragma once

#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "egren/expr.hpp"
#include "egren/jet.hpp"
#include "egren/multi_index.hpp"

namespace egren {

struct Ball {
    Eigen::VectorXd center;
    double radius = 0.0;
};

// Superset of a function's support: a union of balls, optionally with the
// open ball |x| < r_min around the origin removed. Fiber cutoffs add a window
// fiber_min <= |x_C| <= fiber_max on the coordinate subset C = fiber.
struct Support {
    std::vector<Ball> balls;
    double r_min = 0.0;
    std::vector<int> fiber;
    double fiber_min = 0.0;
    double fiber_max = std::numeric_limits<double>::infinity();

    bool empty() const { return balls.empty(); }
    bool contains_origin_neighbourhood() const;
    double max_norm() const;  // sup |x| over the support
};

// Parameters of the cutoff theta(x) = S((R - |x|)/(R - eps)) with the smooth
// step S(t) = f(t)/(f(t)+f(1-t)), f(t) = exp(-1/t). theta = 1 on |x| <= eps
// and 0 on |x| >= R.
struct CutoffFamily {
    double eps = 0.5;
    double R = 1.0;

    double operator()(double norm) const;   // theta at |x| = norm
    Jet operator()(const Jet& norm) const;  // caller guarantees eps < norm < R
};

// Smooth, not necessarily compactly supported multiplier.
class SmoothFactor {
public:
    enum class Kind { Cutoff, CutoffComplement, CutoffDifference, Monomial, Expression, PlaneWave };

    // theta(s x), 1 - theta(s x), theta(s1 x) - theta(s2 x) with s2 > s1
    static SmoothFactor cutoff(const CutoffFamily& c, double s);
    static SmoothFactor cutoff_complement(const CutoffFamily& c, double s);
    static SmoothFactor cutoff_difference(const CutoffFamily& c, double s1, double s2);
    // x^alpha, or x^alpha/alpha! when `normalized`
    static SmoothFactor monomial(const MultiIndex& alpha, bool normalized);
    static SmoothFactor expression(const Expr& e);
    // cos(k.x) or sin(k.x)
    static SmoothFactor plane_wave(const Eigen::VectorXd& k, bool sine);
    // Cutoffs only: measure |x| over the given coordinates (fiber cutoffs).
    SmoothFactor on_coordinates(std::vector<int> coords) const;

    Kind kind() const { return kind_; }
    double value(const double* x, int dim) const;
    Jet jet(const Jet* x, int dim) const;
    // Region outside of which the factor vanishes, when it has one.
    bool compact() const;
    Support restrict_support(const Support& s) const;
    double analytic_radius() const;  // around the origin
    SmoothFactor dilated(double lambda) const;  // f(x / lambda)

private:
    Kind kind_ = Kind::Monomial;
    CutoffFamily cutoff_;
    double s1_ = 1.0, s2_ = 1.0;
    MultiIndex alpha_;
    double norm_ = 1.0;
    Expr expr_;
    double expr_scale_ = 1.0;  // expression evaluated at x / expr_scale_
    Eigen::VectorXd k_;
    bool sine_ = false;
    std::vector<int> coords_;  // empty: all coordinates
};

class TestFunction {
public:
    struct Node;

    TestFunction() = default;
    explicit TestFunction(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    // Standard bump exp(-1/(1-|u|^2)) at u = (x-c)/r times a polynomial in u.
    static TestFunction bump(const Eigen::VectorXd& c, double r,
                             std::vector<std::pair<MultiIndex, double>> poly = {});
    // 1-d convenience: poly[k] multiplies u^k.
    static TestFunction bump1(double c, double r, const std::vector<double>& poly = {1.0});
    // Compactly supported factor used as a test function (cutoffs, weights).
    static TestFunction cutoff(int dim, const CutoffFamily& c, double s = 1.0);

    bool valid() const { return static_cast<bool>(node_); }
    int dimension() const;
    double operator()(std::span<const double> x) const;
    double operator()(const Eigen::VectorXd& x) const { return (*this)(std::span<const double>(x.data(), x.size())); }
    Jet jet(const Jet* x) const;
    // Taylor expansion at x to the given order.
    Jet jet_at(std::span<const double> x, int order) const;
    double derivative_at(const MultiIndex& alpha, std::span<const double> x) const;
    double derivative_at_origin(const MultiIndex& alpha) const;
    Support support() const;
    double analytic_radius() const;

    // lambda^{-d} phi(x / lambda)
    TestFunction dilated(double lambda) const;
    TestFunction scaled(double a) const;
    TestFunction times(const SmoothFactor& f) const;
    // psi(z) = phi(A z + b), A of shape dim x m
    TestFunction pullback(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) const;
    // phi - sum_{|alpha| <= rho} w(x) x^alpha/alpha! d^alpha phi(0); `flat`
    // is a radius on which w == 1.
    TestFunction w_subtracted(const TestFunction& w, int rho, double flat) const;
    // Fiberwise version: psi(x, eta) - w(eta) sum_{|alpha| <= rho} eta^alpha/alpha!
    // d_eta^alpha psi(x, 0), with `fiber` the eta coordinates.
    TestFunction w_subtracted_fiber(const SmoothFactor& w, int rho, const std::vector<int>& fiber) const;

    friend TestFunction operator+(const TestFunction& a, const TestFunction& b);
    friend TestFunction operator-(const TestFunction& a, const TestFunction& b);

    const Node& node() const { return *node_; }

private:
    std::shared_ptr<const Node> node_;
};

struct TestFunction::Node {
    virtual ~Node() = default;
    virtual int dimension() const = 0;
    virtual double value(const double* x) const = 0;
    virtual Jet jet(const Jet* x) const = 0;
    virtual Support support() const = 0;
    virtual double analytic_radius() const = 0;
};

// Default probe set for scaling-degree estimation in R^d: bumps at the origin
// with radii 1, 1/2, 1/4 and polynomial factors 1 and x1.
std::vector<TestFunction> default_probes(int d);
// Bumps kept away from the origin, for kernels that are not locally integrable.
std::vector<TestFunction> off_locus_probes(int d);

}  // namespace egren
