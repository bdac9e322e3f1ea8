#pragma once

#include <span>
#include <vector>

#include "egren/multi_index.hpp"

namespace egren {

// Index tables for truncated multivariate Taylor polynomials of total degree
// <= order in nvars variables. Layouts are interned and live for the process.
class JetLayout {
public:
    static const JetLayout& get(int nvars, int order);

    int nvars() const { return nvars_; }
    int order() const { return order_; }
    std::size_t size() const { return indices_.size(); }
    const MultiIndex& index(std::size_t i) const { return indices_[i]; }
    int degree(std::size_t i) const { return degree_[i]; }
    int position(const MultiIndex& alpha) const;  // -1 when |alpha| > order

    struct Product {
        int lhs, rhs, out;
    };
    const std::vector<Product>& products() const { return products_; }

    JetLayout(int nvars, int order);

private:
    int nvars_;
    int order_;
    std::vector<MultiIndex> indices_;
    std::vector<int> degree_;
    std::vector<Product> products_;
};

// Truncated Taylor expansion f(x0 + h) = sum_alpha c_alpha h^alpha. Arithmetic
// propagates expansions exactly up to the layout order (forward-mode jets).
class Jet {
public:
    explicit Jet(const JetLayout& layout, double constant = 0.0);

    static Jet variable(const JetLayout& layout, int var, double value);

    const JetLayout& layout() const { return *layout_; }
    double value() const { return c_[0]; }
    double coeff(std::size_t i) const { return c_[i]; }
    double& coeff(std::size_t i) { return c_[i]; }
    double coeff(const MultiIndex& alpha) const;
    // d^alpha f(x0) = alpha! * c_alpha
    double derivative(const MultiIndex& alpha) const;
    bool is_zero() const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(double s);
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, const Jet& a) { return (-1.0 * a) + s; }
    friend Jet operator-(const Jet& a) { return -1.0 * a; }
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);

    // sum_k taylor[k] (x - x0)^k where x0 = value(); taylor[k] = f^(k)(x0)/k!
    Jet compose(std::span<const double> taylor) const;

private:
    const JetLayout* layout_;
    std::vector<double> c_;
};

// Univariate Taylor coefficients f^(k)(a)/k!, k = 0..order.
std::vector<double> exp_series(double a, int order);
std::vector<double> log_series(double a, int order);
std::vector<double> pow_series(double a, double p, int order);
std::vector<double> sin_series(double a, int order);
std::vector<double> cos_series(double a, int order);

Jet exp(const Jet& x);
Jet log(const Jet& x);
Jet pow(const Jet& x, double p);
Jet pow(const Jet& x, const Jet& p);
Jet sqrt(const Jet& x);
Jet abs(const Jet& x);
Jet sin(const Jet& x);
Jet cos(const Jet& x);

}  // namespace egren
