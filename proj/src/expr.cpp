#include "egren/expr.hpp"

#include <optional>

#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "egren/errors.hpp"

namespace egren {

using Op = Expr::Op;
using NodePtr = std::shared_ptr<const Expr::Node>;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NodePtr leaf_const(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

int arity_of(Op op) {
    switch (op) {
        case Op::Const:
        case Op::Var: return 0;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow: return 2;
        default: return 1;
    }
}

double apply(Op op, double a, double b) {
    switch (op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
        case Op::Neg: return -a;
        case Op::Pow: return std::pow(a, b);
        case Op::Abs: return std::fabs(a);
        case Op::Log: return std::log(a);
        case Op::Exp: return std::exp(a);
        case Op::Sqrt: return std::sqrt(a);
        case Op::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        case Op::Step: return a >= 0.0 ? 1.0 : 0.0;
        case Op::Sin: return std::sin(a);
        case Op::Cos: return std::cos(a);
        default: return std::nan("");
    }
}

// ---------------------------------------------------------------- parser

struct Parser {
    std::string_view src;
    std::size_t pos = 0;

    [[noreturn]] void error(const std::string& msg, std::size_t at) const {
        int line = 1, col = 1;
        for (std::size_t i = 0; i < at && i < src.size(); ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(msg, at, line, col);
    }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool accept(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            skip_ws();
            if (pos >= src.size())
                error(fmt::format("expected '{}' but input ended", c), pos);
            error(fmt::format("expected '{}'", c), pos);
        }
    }

    Expr parse_all() {
        Expr e = parse_sum();
        skip_ws();
        if (pos != src.size()) error(fmt::format("unexpected '{}'", src[pos]), pos);
        return e;
    }

    Expr parse_sum() {
        Expr e = parse_product();
        for (;;) {
            if (accept('+'))
                e = e + parse_product();
            else if (accept('-'))
                e = e - parse_product();
            else
                return e;
        }
    }

    Expr parse_product() {
        Expr e = parse_unary();
        for (;;) {
            if (accept('*'))
                e = e * parse_unary();
            else if (accept('/'))
                e = e / parse_unary();
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept('^')) return pow(base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos >= src.size()) error("unexpected end of input", pos);
        const char c = src[pos];
        if (c == '(') {
            ++pos;
            Expr e = parse_sum();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        error(fmt::format("unexpected '{}'", c), pos);
    }

    Expr parse_number() {
        const std::size_t start = pos;
        const std::string rest(src.substr(pos));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) error("malformed number", start);
        pos += static_cast<std::size_t>(end - rest.c_str());
        return Expr::constant(v);
    }

    Expr parse_identifier() {
        const std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        const std::string name(src.substr(start, pos - start));
        skip_ws();
        const bool call = pos < src.size() && src[pos] == '(';
        if (!call) {
            if (name == "pi") return Expr::constant(std::numbers::pi);
            if (name == "e") return Expr::constant(std::numbers::e);
            if (name.size() > 1 && name[0] == 'x') {
                bool digits = true;
                for (std::size_t i = 1; i < name.size(); ++i)
                    digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
                if (digits) {
                    const int idx = std::stoi(name.substr(1));
                    if (idx < 1) error("variable indices start at x1", start);
                    return Expr::variable(idx - 1);
                }
            }
            error(fmt::format("unknown identifier '{}'", name), start);
        }
        ++pos;  // '('
        std::vector<Expr> args;
        if (!accept(')')) {
            args.push_back(parse_sum());
            while (accept(',')) args.push_back(parse_sum());
            expect(')');
        }
        auto want = [&](std::size_t n) {
            if (args.size() != n)
                error(fmt::format("{} takes {} argument(s), got {}", name, n, args.size()), start);
        };
        if (name == "pow") {
            want(2);
            return pow(args[0], args[1]);
        }
        static const std::pair<const char*, Op> unary[] = {
            {"abs", Op::Abs},   {"log", Op::Log},  {"exp", Op::Exp},       {"sqrt", Op::Sqrt},
            {"sign", Op::Sign}, {"sgn", Op::Sign}, {"step", Op::Step},     {"heaviside", Op::Step},
            {"sin", Op::Sin},   {"cos", Op::Cos},
        };
        for (const auto& [fname, op] : unary)
            if (name == fname) {
                want(1);
                return Expr::make(op, {args[0]});
            }
        error(fmt::format("unknown function '{}'", name), start);
    }
};

// ------------------------------------------------------------ evaluation

double eval_node(const Expr::Node& n, const double* x) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return x[n.var];
        case Op::Pow: {
            const double a = eval_node(*n.args[0], x);
            const Expr::Node& e = *n.args[1];
            if (e.op == Op::Const) {
                if (e.value == 2.0) return a * a;
                if (e.value == -1.0) return 1.0 / a;
                return std::pow(a, e.value);
            }
            return std::pow(a, eval_node(e, x));
        }
        default: break;
    }
    const double a = eval_node(*n.args[0], x);
    if (n.args.size() == 1) return apply(n.op, a, 0.0);
    return apply(n.op, a, eval_node(*n.args[1], x));
}

Jet eval_jet(const Expr::Node& n, const Jet* x) {
    const JetLayout& L = x[0].layout();
    switch (n.op) {
        case Op::Const: return Jet(L, n.value);
        case Op::Var: return x[n.var];
        case Op::Add: return eval_jet(*n.args[0], x) + eval_jet(*n.args[1], x);
        case Op::Sub: return eval_jet(*n.args[0], x) - eval_jet(*n.args[1], x);
        case Op::Mul: return eval_jet(*n.args[0], x) * eval_jet(*n.args[1], x);
        case Op::Div: return eval_jet(*n.args[0], x) / eval_jet(*n.args[1], x);
        case Op::Neg: return -eval_jet(*n.args[0], x);
        case Op::Pow: return pow(eval_jet(*n.args[0], x), eval_jet(*n.args[1], x));
        case Op::Abs: return abs(eval_jet(*n.args[0], x));
        case Op::Log: return log(eval_jet(*n.args[0], x));
        case Op::Exp: return exp(eval_jet(*n.args[0], x));
        case Op::Sqrt: return sqrt(eval_jet(*n.args[0], x));
        case Op::Sign:
        case Op::Step: return Jet(L, apply(n.op, eval_jet(*n.args[0], x).value(), 0.0));
        case Op::Sin: return sin(eval_jet(*n.args[0], x));
        case Op::Cos: return cos(eval_jet(*n.args[0], x));
    }
    return Jet(L, std::nan(""));
}

int max_var(const Expr::Node& n) {
    int m = n.op == Op::Var ? n.var : -1;
    for (const auto& a : n.args) m = std::max(m, max_var(*a));
    return m;
}

// Affine form sum a_i x_i + c, when the subtree is affine.
struct Affine {
    Eigen::VectorXd a;
    double c = 0.0;
};

std::optional<Affine> affine_of(const Expr::Node& n, int dim) {
    switch (n.op) {
        case Op::Const: return Affine{Eigen::VectorXd::Zero(dim), n.value};
        case Op::Var: {
            Affine f{Eigen::VectorXd::Zero(dim), 0.0};
            if (n.var < dim) f.a[n.var] = 1.0;
            return f;
        }
        case Op::Neg: {
            auto f = affine_of(*n.args[0], dim);
            if (f) {
                f->a = -f->a;
                f->c = -f->c;
            }
            return f;
        }
        case Op::Add:
        case Op::Sub: {
            auto f = affine_of(*n.args[0], dim);
            auto g = affine_of(*n.args[1], dim);
            if (!f || !g) return std::nullopt;
            const double s = n.op == Op::Add ? 1.0 : -1.0;
            return Affine{f->a + s * g->a, f->c + s * g->c};
        }
        case Op::Mul: {
            auto f = affine_of(*n.args[0], dim);
            auto g = affine_of(*n.args[1], dim);
            if (!f || !g) return std::nullopt;
            if (f->a.isZero()) return Affine{f->c * g->a, f->c * g->c};
            if (g->a.isZero()) return Affine{g->c * f->a, g->c * f->c};
            return std::nullopt;
        }
        case Op::Div: {
            auto f = affine_of(*n.args[0], dim);
            auto g = affine_of(*n.args[1], dim);
            if (!f || !g || !g->a.isZero() || g->c == 0.0) return std::nullopt;
            return Affine{f->a / g->c, f->c / g->c};
        }
        default: return std::nullopt;
    }
}

double sd_node(const Expr::Node& n, const Eigen::MatrixXd& basis) {
    const int dim = static_cast<int>(basis.rows());
    if (auto f = affine_of(n, dim)) {
        if (f->a.isZero() && f->c == 0.0) return -kInf;
        if (f->c != 0.0) return 0.0;
        if (basis.cols() == 0) return -1.0;
        const double residual = (f->a.transpose() * basis).norm();
        return residual <= 1e-12 * f->a.norm() ? -1.0 : 0.0;
    }
    auto sd = [&](int i) { return sd_node(*n.args[static_cast<std::size_t>(i)], basis); };
    switch (n.op) {
        case Op::Add:
        case Op::Sub: return std::max(sd(0), sd(1));
        case Op::Mul: {
            const double a = sd(0), b = sd(1);
            if (a == -kInf || b == -kInf) return -kInf;
            return a + b;
        }
        case Op::Div: {
            const double a = sd(0), b = sd(1);
            if (a == -kInf) return -kInf;
            if (b == -kInf) return kInf;
            return a - b;
        }
        case Op::Neg:
        case Op::Abs: return sd(0);
        case Op::Sqrt: return 0.5 * sd(0);
        case Op::Pow: {
            const Expr::Node& e = *n.args[1];
            if (e.op != Op::Const) return sd(0) <= 0.0 ? 0.0 : kInf;
            const double a = sd(0);
            if (a == -kInf) return e.value > 0 ? -kInf : kInf;
            if (e.value == 0.0) return 0.0;
            return e.value * a;
        }
        case Op::Log: return 0.0;
        case Op::Exp: return sd(0) <= 0.0 ? 0.0 : kInf;
        case Op::Sin: {
            const double a = sd(0);
            return a < 0.0 ? a : 0.0;
        }
        case Op::Cos:
        case Op::Sign:
        case Op::Step: return 0.0;
        default: return 0.0;
    }
}

bool needs_parens(const Expr::Node& child, int parent_prec, bool right) {
    int prec = 4;
    switch (child.op) {
        case Op::Add:
        case Op::Sub: prec = 1; break;
        case Op::Mul:
        case Op::Div: prec = 2; break;
        case Op::Neg: prec = 2; break;
        case Op::Const: prec = child.value < 0 ? 2 : 4; break;
        default: prec = 4;
    }
    return prec < parent_prec || (right && prec == parent_prec);
}

std::string str_node(const Expr::Node& n) {
    auto wrap = [](const Expr::Node& c, int prec, bool right) {
        std::string s = str_node(c);
        return needs_parens(c, prec, right) ? "(" + s + ")" : s;
    };
    switch (n.op) {
        case Op::Const: return fmt::format("{}", n.value);
        case Op::Var: return fmt::format("x{}", n.var + 1);
        case Op::Add: return wrap(*n.args[0], 1, false) + " + " + wrap(*n.args[1], 1, true);
        case Op::Sub: return wrap(*n.args[0], 1, false) + " - " + wrap(*n.args[1], 1, true);
        case Op::Mul: return wrap(*n.args[0], 2, false) + " * " + wrap(*n.args[1], 2, true);
        case Op::Div: return wrap(*n.args[0], 2, false) + " / " + wrap(*n.args[1], 2, true);
        case Op::Neg: return "-" + wrap(*n.args[0], 3, false);
        case Op::Pow: return "pow(" + str_node(*n.args[0]) + ", " + str_node(*n.args[1]) + ")";
        default: break;
    }
    static const std::pair<Op, const char*> names[] = {
        {Op::Abs, "abs"},   {Op::Log, "log"},   {Op::Exp, "exp"}, {Op::Sqrt, "sqrt"},
        {Op::Sign, "sign"}, {Op::Step, "step"}, {Op::Sin, "sin"}, {Op::Cos, "cos"},
    };
    for (const auto& [op, name] : names)
        if (op == n.op) return std::string(name) + "(" + str_node(*n.args[0]) + ")";
    return "?";
}

}  // namespace

Expr::Expr() : node_(leaf_const(0.0)) {}

Expr Expr::parse(std::string_view text) {
    Parser p{text};
    p.skip_ws();
    if (p.pos == text.size()) p.error("empty expression", p.pos);
    return p.parse_all();
}

Expr Expr::constant(double v) { return Expr(leaf_const(v)); }

Expr Expr::variable(int index) {
    require(index >= 0, "variable index must be nonnegative");
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = index;
    return Expr(n);
}

Expr Expr::monomial(const std::vector<int>& alpha) {
    Expr e = constant(1.0);
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int k = 0; k < alpha[i]; ++k) e = e * variable(static_cast<int>(i));
    return e;
}

Expr Expr::make(Op op, std::vector<Expr> args) {
    require(static_cast<int>(args.size()) == arity_of(op), "wrong operand count");
    bool all_const = !args.empty();
    for (const auto& a : args) all_const = all_const && a.is_constant();
    if (all_const) {
        const double a = args[0].constant_value();
        const double b = args.size() > 1 ? args[1].constant_value() : 0.0;
        return constant(apply(op, a, b));
    }
    switch (op) {
        case Op::Add:
            if (args[0].is_constant(0.0)) return args[1];
            if (args[1].is_constant(0.0)) return args[0];
            break;
        case Op::Sub:
            if (args[1].is_constant(0.0)) return args[0];
            if (args[0].is_constant(0.0)) return make(Op::Neg, {args[1]});
            break;
        case Op::Mul:
            if (args[0].is_constant(0.0) || args[1].is_constant(0.0)) return constant(0.0);
            if (args[0].is_constant(1.0)) return args[1];
            if (args[1].is_constant(1.0)) return args[0];
            if (args[0].is_constant(-1.0)) return make(Op::Neg, {args[1]});
            if (args[1].is_constant(-1.0)) return make(Op::Neg, {args[0]});
            break;
        case Op::Div:
            if (args[0].is_constant(0.0)) return constant(0.0);
            if (args[1].is_constant(1.0)) return args[0];
            break;
        case Op::Neg:
            if (args[0].op() == Op::Neg) return Expr(args[0].node().args[0]);
            break;
        case Op::Pow:
            if (args[1].is_constant(1.0)) return args[0];
            if (args[1].is_constant(0.0)) return constant(1.0);
            break;
        default: break;
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    for (auto& a : args) n->args.push_back(a.node_);
    return Expr(n);
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::make(Op::Add, {a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::make(Op::Sub, {a, b}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::make(Op::Mul, {a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::make(Op::Div, {a, b}); }
Expr operator-(const Expr& a) { return Expr::make(Op::Neg, {a}); }
Expr pow(const Expr& a, const Expr& b) { return Expr::make(Op::Pow, {a, b}); }

int Expr::arity() const { return max_var(*node_) + 1; }

double Expr::eval(const double* x) const { return eval_node(*node_, x); }

Jet Expr::eval(const Jet* x) const { return eval_jet(*node_, x); }

Expr Expr::derivative(int var) const {
    const Node& n = *node_;
    auto arg = [&](int i) { return Expr(n.args[static_cast<std::size_t>(i)]); };
    auto darg = [&](int i) { return arg(i).derivative(var); };
    switch (n.op) {
        case Op::Const: return constant(0.0);
        case Op::Var: return constant(n.var == var ? 1.0 : 0.0);
        case Op::Add: return darg(0) + darg(1);
        case Op::Sub: return darg(0) - darg(1);
        case Op::Mul: return darg(0) * arg(1) + arg(0) * darg(1);
        case Op::Div: return (darg(0) * arg(1) - arg(0) * darg(1)) / pow(arg(1), constant(2.0));
        case Op::Neg: return -darg(0);
        case Op::Pow: {
            const Expr f = arg(0), g = arg(1);
            if (g.is_constant())
                return g * pow(f, constant(g.constant_value() - 1.0)) * darg(0);
            return *this * (darg(1) * make(Op::Log, {f}) + g * darg(0) / f);
        }
        case Op::Abs: return make(Op::Sign, {arg(0)}) * darg(0);
        case Op::Log: return darg(0) / arg(0);
        case Op::Exp: return *this * darg(0);
        case Op::Sqrt: return darg(0) / (constant(2.0) * *this);
        // piecewise constant away from their jump set
        case Op::Sign:
        case Op::Step: return constant(0.0);
        case Op::Sin: return make(Op::Cos, {arg(0)}) * darg(0);
        case Op::Cos: return -(make(Op::Sin, {arg(0)}) * darg(0));
    }
    return constant(0.0);
}

Expr Expr::derivative(const std::vector<int>& alpha) const {
    Expr e = *this;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int k = 0; k < alpha[i]; ++k) e = e.derivative(static_cast<int>(i));
    return e;
}

Expr Expr::shifted(int offset) const {
    const Node& n = *node_;
    if (n.op == Op::Const) return *this;
    if (n.op == Op::Var) return variable(n.var + offset);
    std::vector<Expr> args;
    for (const auto& a : n.args) args.push_back(Expr(a).shifted(offset));
    return make(n.op, std::move(args));
}

namespace {

// Affine form c + a.z of a node after substituting x = m z, when it is one.
std::optional<std::pair<Eigen::VectorXd, double>> affine_after(const Expr::Node& n, const Eigen::MatrixXd& m) {
    using Op = Expr::Op;
    switch (n.op) {
        case Op::Const: return std::make_pair(Eigen::VectorXd::Zero(m.cols()), n.value);
        case Op::Var:
            if (n.var >= m.rows()) return std::nullopt;
            return std::make_pair(Eigen::VectorXd(m.row(n.var).transpose()), 0.0);
        case Op::Neg: {
            auto a = affine_after(*n.args[0], m);
            if (!a) return std::nullopt;
            return std::make_pair(Eigen::VectorXd(-a->first), -a->second);
        }
        case Op::Add:
        case Op::Sub: {
            auto a = affine_after(*n.args[0], m), b = affine_after(*n.args[1], m);
            if (!a || !b) return std::nullopt;
            const double s = n.op == Op::Add ? 1.0 : -1.0;
            return std::make_pair(Eigen::VectorXd(a->first + s * b->first), a->second + s * b->second);
        }
        case Op::Mul: {
            auto a = affine_after(*n.args[0], m), b = affine_after(*n.args[1], m);
            if (!a || !b) return std::nullopt;
            if (a->first.isZero(0.0)) return std::make_pair(Eigen::VectorXd(a->second * b->first), a->second * b->second);
            if (b->first.isZero(0.0)) return std::make_pair(Eigen::VectorXd(b->second * a->first), a->second * b->second);
            return std::nullopt;
        }
        case Op::Div: {
            auto a = affine_after(*n.args[0], m), b = affine_after(*n.args[1], m);
            if (!a || !b || !b->first.isZero(0.0) || b->second == 0.0) return std::nullopt;
            return std::make_pair(Eigen::VectorXd(a->first / b->second), a->second / b->second);
        }
        default: return std::nullopt;
    }
}

}  // namespace

Expr Expr::linear_substitute(const Eigen::MatrixXd& m) const {
    const Node& n = *node_;
    if (n.op == Op::Const) return *this;
    if (n.op != Op::Var) {
        if (auto a = affine_after(n, m)) {
            // collect linear forms so that cancellations such as
            // (x + y) - (x - y) = 2 y are exact
            Expr e = constant(a->second);
            for (int j = 0; j < m.cols(); ++j) {
                const double c = a->first[j];
                if (c == 0.0) continue;
                e = e + (c == 1.0 ? variable(j) : constant(c) * variable(j));
            }
            return e;
        }
    }
    if (n.op == Op::Var) {
        require(n.var < m.rows(), "substitution matrix too small");
        Expr e = constant(0.0);
        for (int j = 0; j < m.cols(); ++j)
            if (m(n.var, j) != 0.0) e = e + constant(m(n.var, j)) * variable(j);
        return e;
    }
    std::vector<Expr> args;
    for (const auto& a : n.args) args.push_back(Expr(a).linear_substitute(m));
    return make(n.op, std::move(args));
}

namespace {

bool smooth_node(const Expr::Node& n) {
    auto arg = [&](int i) { return smooth_node(*n.args[static_cast<std::size_t>(i)]); };
    switch (n.op) {
        case Op::Const:
        case Op::Var: return true;
        case Op::Add:
        case Op::Sub:
        case Op::Mul: return arg(0) && arg(1);
        case Op::Div: return arg(0) && n.args[1]->op == Op::Const && n.args[1]->value != 0.0;
        case Op::Neg:
        case Op::Exp:
        case Op::Sin:
        case Op::Cos: return arg(0);
        case Op::Pow: {
            const Expr::Node& e = *n.args[1];
            return arg(0) && e.op == Op::Const && e.value >= 0 && e.value == std::floor(e.value);
        }
        default: return false;
    }
}

}  // namespace

bool Expr::smooth_everywhere() const { return smooth_node(*node_); }

double Expr::singular_degree(const Eigen::MatrixXd& basis) const {
    Eigen::MatrixXd b = basis;
    const int need = arity();
    if (b.rows() < need) {
        Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(need, b.cols());
        grown.topRows(b.rows()) = b;
        b = grown;
    }
    return sd_node(*node_, b);
}

std::string Expr::str() const { return str_node(*node_); }

}  // namespace egren
