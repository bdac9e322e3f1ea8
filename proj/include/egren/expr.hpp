#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "egren/jet.hpp"

namespace egren {

// Expression tree of the kernel DSL. Variables are x1..xN (0-based index
// internally). Grammar: + - * / ^, unary minus, numbers, pi, e, and the
// functions abs log exp sqrt pow sign/sgn step/heaviside sin cos.
class Expr {
public:
    enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Abs, Log, Exp, Sqrt, Sign, Step, Sin, Cos };

    struct Node {
        Op op;
        double value = 0.0;  // Const
        int var = -1;        // Var
        std::vector<std::shared_ptr<const Node>> args;
    };

    Expr();  // constant 0
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    static Expr parse(std::string_view text);
    static Expr constant(double v);
    static Expr variable(int index);
    static Expr monomial(const std::vector<int>& alpha);  // x^alpha

    Op op() const { return node_->op; }
    const Node& node() const { return *node_; }
    bool is_constant() const { return node_->op == Op::Const; }
    bool is_constant(double v) const { return is_constant() && node_->value == v; }
    double constant_value() const { return node_->value; }
    // number of variables referenced: 1 + largest index, 0 when constant
    int arity() const;

    double eval(const double* x) const;
    Jet eval(const Jet* x) const;

    Expr derivative(int var) const;
    Expr derivative(const std::vector<int>& alpha) const;
    Expr shifted(int offset) const;  // x_i -> x_{i+offset}
    // Substitute variable i by the linear form sum_j m(i,j) z_j.
    Expr linear_substitute(const Eigen::MatrixXd& m) const;

    // Upper estimate of the power-law strength at the subspace spanned by the
    // columns of `basis` (empty basis means the origin): the kernel is bounded
    // by dist^{-s}. Constant-free linear forms vanishing there count as -1,
    // log and bounded piecewise functions as 0.
    double singular_degree(const Eigen::MatrixXd& basis) const;
    // Built from variables and constants with + - *, exp, sin, cos, division by
    // nonzero constants and nonnegative integer powers: smooth on all of R^n.
    bool smooth_everywhere() const;

    std::string str() const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& a, const Expr& b);

    static Expr make(Op op, std::vector<Expr> args);

private:
    std::shared_ptr<const Node> node_;
};

}  // namespace egren
