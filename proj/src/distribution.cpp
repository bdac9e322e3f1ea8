#include "egren/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "egren/errors.hpp"

namespace egren {

namespace {

bool same_coords(std::vector<int> a, std::vector<int> b) {
    if (a.empty() || a.size() != b.size()) return false;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Interval = std::pair<double, double>;

std::vector<Interval> merge(std::vector<Interval> v) {
    std::sort(v.begin(), v.end());
    std::vector<Interval> out;
    for (const auto& iv : v) {
        if (iv.second <= iv.first) continue;
        if (!out.empty() && iv.first <= out.back().second)
            out.back().second = std::max(out.back().second, iv.second);
        else
            out.push_back(iv);
    }
    return out;
}

int grading_power(double sd, int k) {
    if (!(sd > 0.0)) return 2;
    if (sd >= k) return 12;
    return std::clamp(static_cast<int>(std::ceil(2.0 / (k - sd))), 2, 12);
}

}  // namespace

DistributionKernel::DistributionKernel(int d, std::vector<Component> components)
    : d_(d), components_(std::move(components)) {
    require(d >= 1, "distribution dimension must be positive");
    for (auto& c : components_) {
        c.block_smooth.resize(c.blocks.size(), false);
        require(static_cast<int>(c.beta.size()) == d && static_cast<int>(c.pinned.size()) == d,
                "component has wrong dimension");
        require(c.blocks.size() == c.block_sd.size(), "block data mismatch");
    }
}

DistributionKernel DistributionKernel::regular(int d, const Expr& kernel, std::optional<double> declared_sd) {
    require(d >= 1, "distribution dimension must be positive");
    require(kernel.arity() <= d, fmt::format("kernel uses x{} but the dimension is {}", kernel.arity(), d));
    Component c;
    c.inner = kernel;
    c.beta = zero_index(d);
    c.pinned.assign(static_cast<std::size_t>(d), false);
    std::vector<int> all(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) all[static_cast<std::size_t>(i)] = i;
    c.blocks.push_back(all);
    c.block_sd.push_back(declared_sd ? *declared_sd : kernel.singular_degree(Eigen::MatrixXd::Zero(d, 0)));
    DistributionKernel t(d, {c});
    t.declared_sd_ = declared_sd;
    return t;
}

DistributionKernel DistributionKernel::regular(int d, std::string_view dsl, std::optional<double> declared_sd) {
    return regular(d, Expr::parse(dsl), declared_sd);
}

DistributionKernel DistributionKernel::delta(int d, const std::vector<std::pair<MultiIndex, double>>& terms) {
    std::vector<Component> comps;
    double sd = -kInf;
    for (const auto& [alpha, coef] : terms) {
        require(static_cast<int>(alpha.size()) == d, "delta multi-index has wrong dimension");
        Component c;
        c.coeff = coef;
        c.inner = Expr::constant(1.0);
        c.beta = alpha;
        c.pinned.assign(static_cast<std::size_t>(d), true);
        comps.push_back(c);
        if (coef != 0.0) sd = std::max(sd, static_cast<double>(d + order(alpha)));
    }
    DistributionKernel t(d, std::move(comps));
    if (sd > -kInf) t.declared_sd_ = sd;
    return t;
}

// ---------------------------------------------------------------- pairing

Estimate DistributionKernel::integrate_component(const Component& c, const TestFunction& phi,
                                                 const PairOptions& opt) const {
    if (c.blocks.size() < 2) return integrate_blocks(c, phi, opt, quad_);
    // Nested blocks: inner integrals near the edge of the support can be
    // 1e-40 of the total and never meet a purely relative tolerance. A coarse
    // pass fixes the absolute scale.
    QuadratureConfig coarse = quad_;
    coarse.rel_tol = 1e-3;
    coarse.max_intervals = 24;
    const Estimate e0 = integrate_blocks(c, phi, opt, coarse);
    QuadratureConfig q = quad_;
    if (std::isfinite(e0.magnitude)) q.abs_tol = std::max(q.abs_tol, 1e-3 * q.rel_tol * e0.magnitude);
    return integrate_blocks(c, phi, opt, q);
}

Estimate DistributionKernel::integrate_blocks(const Component& c, const TestFunction& phi, const PairOptions& opt,
                                              const QuadratureConfig& q) const {
    const int d = d_;
    const int border = order(c.beta);
    const JetLayout* layout = border > 0 ? &JetLayout::get(d, border) : nullptr;
    std::vector<Jet> jvars;

    auto G = [&](const double* y) -> double {
        if (border == 0) {
            const double v = phi.node().value(y);
            if (v == 0.0 || !c.outer) return v;
            return v * c.outer->eval(y);
        }
        jvars.clear();
        for (int i = 0; i < d; ++i) jvars.push_back(Jet::variable(*layout, i, y[i]));
        Jet j = phi.node().jet(jvars.data());
        if (c.outer) j = j * c.outer->eval(jvars.data());
        return j.derivative(c.beta);
    };
    std::vector<double> y(static_cast<std::size_t>(d), 0.0);
    auto integrand = [&]() -> Estimate {
        const double g = G(y.data());
        if (g == 0.0) return {};
        const double v = c.inner.eval(y.data()) * g;
        return {v, 0.0, std::fabs(v), true};
    };
    if (c.blocks.empty()) {
        const Estimate e = integrand();
        return {e.value, 0.0, e.magnitude, std::isfinite(e.value)};
    }

    const Support sup = phi.support();
    for (const auto& b : sup.balls)
        if (!std::isfinite(b.radius)) fail(ErrorKind::InvalidArgument, "test function support is unbounded");
    const bool single = c.blocks.size() == 1 && static_cast<int>(c.blocks[0].size()) == d;
    const double r_min = single ? sup.r_min : 0.0;

    std::vector<char> fixed(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) fixed[static_cast<std::size_t>(i)] = c.pinned[static_cast<std::size_t>(i)];

    std::vector<char> in_window(c.blocks.size(), 0);
    for (std::size_t b = 0; b < c.blocks.size(); ++b) in_window[b] = same_coords(c.blocks[b], sup.fiber);

    std::function<Estimate(std::size_t)> block;
    block = [&](std::size_t bi) -> Estimate {
        if (bi == c.blocks.size()) return integrand();
        const auto& idx = c.blocks[bi];
        const int k = static_cast<int>(idx.size());
        // slices of the support balls with the fixed coordinates
        std::vector<Ball> slices;
        for (const auto& ball : sup.balls) {
            double r2 = ball.radius * ball.radius;
            for (int i = 0; i < d; ++i)
                if (fixed[static_cast<std::size_t>(i)]) {
                    const double t = y[static_cast<std::size_t>(i)] - ball.center[i];
                    r2 -= t * t;
                }
            if (r2 <= 0.0) continue;
            Eigen::VectorXd cb(k);
            for (int j = 0; j < k; ++j) cb[j] = ball.center[idx[static_cast<std::size_t>(j)]];
            slices.push_back({cb, std::sqrt(r2)});
        }
        if (slices.empty()) return {};
        const double sd = opt.effective_sd ? *opt.effective_sd : c.block_sd[bi];
        const int p = grading_power(sd, k);
        const bool windowed = in_window[bi] != 0;
        const double w_lo = windowed ? sup.fiber_min : 0.0;
        const double w_hi = windowed ? sup.fiber_max : kInf;
        if (w_lo >= w_hi) return {};

        for (int j : idx) fixed[static_cast<std::size_t>(j)] = 1;
        auto set_point = [&](const Eigen::VectorXd& dir, double r) {
            for (int j = 0; j < k; ++j) y[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] = r * dir[j];
        };
        // radial pieces along a ray: the union of the ball chords, split at
        // every chord endpoint so nested supports of very different size
        // get their own panels
        auto ray_ranges = [&](const Eigen::VectorXd& dir) {
            std::vector<Interval> iv;
            std::vector<double> cuts;
            for (const auto& s : slices) {
                const double pr = dir.dot(s.center);
                const double disc = pr * pr - s.center.squaredNorm() + s.radius * s.radius;
                if (disc <= 0.0) continue;
                const double q = std::sqrt(disc);
                const double a = std::max({0.0, pr - q, r_min, w_lo}), b = std::min(pr + q, w_hi);
                if (a >= b) continue;
                iv.push_back({a, b});
                cuts.push_back(a);
                cuts.push_back(b);
            }
            std::vector<Interval> out;
            std::sort(cuts.begin(), cuts.end());
            for (const auto& [a, b] : merge(iv)) {
                double lo = a;
                for (double c : cuts)
                    if (c > lo && c < b) {
                        out.push_back({lo, c});
                        lo = c;
                    }
                out.push_back({lo, b});
            }
            return out;
        };
        // one radial piece in a substituted variable u in [lo, hi]
        auto piece = [&](const std::function<Estimate(double)>& g, double lo, double hi) -> Estimate {
            if (q.radial_fixed_order <= 0) return integrate(g, lo, hi, q);
            const FixedRule& gl = gauss_legendre(q.radial_fixed_order);
            Estimate e;
            const double h = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
            for (std::size_t i = 0; i < gl.nodes.size(); ++i) e += g(m + h * gl.nodes[i]).scaled(h * gl.weights[i]);
            return e;
        };
        auto radial = [&](const Eigen::VectorXd& dir) -> Estimate {
            Estimate total;
            for (const auto& [a, b] : ray_ranges(dir)) {
                if (a == 0.0) {
                    total += piece(
                        [&](double s) -> Estimate {
                            const double sp = std::pow(s, p - 1);
                            const double r = b * sp * s;
                            set_point(dir, r);
                            const double jac = p * b * sp * std::pow(r, k - 1);
                            if (jac == 0.0) return {};
                            return block(bi + 1).scaled(jac);
                        },
                        0.0, 1.0);
                } else if (b > 8.0 * a) {
                    // r = a (b/a)^u for power-law tails over many scales
                    const double l = std::log(b / a);
                    total += piece(
                        [&](double u) -> Estimate {
                            const double r = a * std::exp(l * u);
                            set_point(dir, r);
                            return block(bi + 1).scaled(l * std::pow(r, k));
                        },
                        0.0, 1.0);
                } else {
                    total += piece(
                        [&](double r) -> Estimate {
                            set_point(dir, r);
                            return block(bi + 1).scaled(std::pow(r, k - 1));
                        },
                        a, b);
                }
            }
            return total;
        };

        Estimate out;
        bool origin_inside = false;
        for (const auto& s : slices) origin_inside = origin_inside || s.center.norm() < s.radius;
        if (k == 1) {
            for (double sgn : {1.0, -1.0}) out += radial(Eigen::VectorXd::Constant(1, sgn));
        } else if (k == 2 && k <= q.fixed_above_dim) {
            std::vector<Interval> arcs;
            if (origin_inside) {
                arcs.push_back({0.0, kTwoPi});
            } else {
                for (const auto& s : slices) {
                    const double n = s.center.norm();
                    const double half = std::asin(std::min(1.0, s.radius / n));
                    double a = std::atan2(s.center[1], s.center[0]) - half;
                    double b = a + 2.0 * half;
                    while (a < 0.0) {
                        a += kTwoPi;
                        b += kTwoPi;
                    }
                    if (b > kTwoPi) {
                        arcs.push_back({a, kTwoPi});
                        arcs.push_back({0.0, b - kTwoPi});
                    } else {
                        arcs.push_back({a, b});
                    }
                }
                arcs = merge(arcs);
            }
            Eigen::VectorXd dir(2);
            for (const auto& [a, b] : arcs)
                out += integrate(
                    [&](double th) -> Estimate {
                        dir << std::cos(th), std::sin(th);
                        const Eigen::VectorXd dcopy = dir;
                        return radial(dcopy);
                    },
                    a, b, q);
        } else if (origin_inside && !c.block_smooth[bi]) {
            const SphereRule& rule = sphere_rule(k, q.sphere_order);
            for (std::size_t i = 0; i < rule.directions.size(); ++i)
                out += radial(rule.directions[i]).scaled(rule.weights[i]);
        } else {
            // support away from this block's origin: tensor Gauss rule on a box
            Eigen::VectorXd lo = Eigen::VectorXd::Constant(k, kInf), hi = Eigen::VectorXd::Constant(k, -kInf);
            for (const auto& s : slices) {
                lo = lo.cwiseMin((s.center.array() - s.radius).matrix());
                hi = hi.cwiseMax((s.center.array() + s.radius).matrix());
            }
            const FixedRule& gl = gauss_legendre(q.box_order);
            const int n = q.box_order;
            std::vector<int> ix(static_cast<std::size_t>(k), 0);
            double vol = 1.0;
            for (int j = 0; j < k; ++j) vol *= 0.5 * (hi[j] - lo[j]);
            for (;;) {
                double w = vol;
                for (int j = 0; j < k; ++j) {
                    const double u = gl.nodes[static_cast<std::size_t>(ix[static_cast<std::size_t>(j)])];
                    w *= gl.weights[static_cast<std::size_t>(ix[static_cast<std::size_t>(j)])];
                    y[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] =
                        0.5 * (lo[j] + hi[j]) + 0.5 * (hi[j] - lo[j]) * u;
                }
                out += block(bi + 1).scaled(w);
                int j = 0;
                while (j < k && ++ix[static_cast<std::size_t>(j)] == n) ix[static_cast<std::size_t>(j++)] = 0;
                if (j == k) break;
            }
        }
        for (int j : idx) fixed[static_cast<std::size_t>(j)] = 0;
        return out;
    };
    return block(0);
}

PairingValue DistributionKernel::pair(const TestFunction& phi, const PairOptions& opt) const {
    require(phi.dimension() == d_, fmt::format("test function dimension {} does not match distribution dimension {}",
                                               phi.dimension(), d_));
    const Support sup = phi.support();
    PairingValue out;
    for (const auto& c : components_) {
        if (c.coeff == 0.0) continue;
        if (opt.check_integrability && !c.blocks.empty()) {
            for (std::size_t b = 0; b < c.blocks.size(); ++b) {
                const int k = static_cast<int>(c.blocks[b].size());
                const double sd = opt.effective_sd ? *opt.effective_sd : c.block_sd[b];
                if (sd < k) continue;
                const bool single = c.blocks.size() == 1 && k == d_;
                bool meets = false;
                for (const auto& ball : sup.balls) {
                    double dist2 = 0.0;
                    for (int j : c.blocks[b]) dist2 += ball.center[j] * ball.center[j];
                    for (int j = 0; j < d_; ++j)
                        if (c.pinned[static_cast<std::size_t>(j)]) dist2 += ball.center[j] * ball.center[j];
                    meets = meets || dist2 < ball.radius * ball.radius;
                }
                if (single && sup.r_min > 0.0) meets = false;
                if (sup.fiber_min > 0.0 && same_coords(c.blocks[b], sup.fiber)) meets = false;
                if (meets)
                    fail(ErrorKind::NeedsExtension,
                         fmt::format("test function support meets the singular locus and the kernel has singular "
                                     "degree {} >= {}; an extension is required",
                                     sd, k));
            }
        }
        const Estimate e = integrate_component(c, phi, opt);
        const double sign = (order(c.beta) % 2 == 0) ? 1.0 : -1.0;
        const double scale = c.coeff * sign;
        const double tol = 1e-6 * std::max(e.magnitude, std::fabs(e.value));
        if (!std::isfinite(e.value) || (!e.converged && e.error > tol))
            fail(ErrorKind::NonIntegrable,
                 fmt::format("quadrature did not converge (value {}, error {})", e.value, e.error));
        out.value += scale * e.value;
        out.error += std::fabs(scale) * e.error;
        out.magnitude += std::fabs(scale) * e.magnitude;
    }
    return out;
}

// --------------------------------------------------------------- algebra

DistributionKernel DistributionKernel::derive(const MultiIndex& alpha) const {
    require(static_cast<int>(alpha.size()) == d_, "derivative multi-index has wrong dimension");
    std::vector<Component> out;
    for (const auto& c : components_) {
        // reject kernels the symbolic differentiator cannot handle
        if (!c.blocks.empty()) {
            const Expr dk = c.inner.derivative(alpha);
            (void)dk;
        }
        // smooth kernel, derivative along integrated coordinates: differentiate
        // K itself, which avoids cancellation in the pairing with d^alpha phi
        bool along_free = true;
        for (int i = 0; i < d_; ++i) along_free = along_free && (alpha[i] == 0 || !c.pinned[i]);
        if (!c.outer && along_free && !c.blocks.empty() && c.inner.smooth_everywhere()) {
            Component n = c;
            n.inner = c.inner.derivative(alpha);
            out.push_back(n);
            continue;
        }
        if (!c.outer) {
            Component n = c;
            n.beta = add(c.beta, alpha);
            out.push_back(n);
            continue;
        }
        // F d^alpha phi = sum_gamma C(alpha,gamma) (-1)^{|gamma|} d^{alpha-gamma}((d^gamma F) phi)
        for (const auto& gamma : sub_indices(alpha)) {
            Component n = c;
            n.coeff = c.coeff * binomial(alpha, gamma);
            n.outer = c.outer->derivative(gamma);
            if (n.outer->is_constant(0.0)) continue;
            MultiIndex rest = alpha;
            for (std::size_t i = 0; i < rest.size(); ++i) rest[i] -= gamma[i];
            n.beta = add(c.beta, rest);
            out.push_back(n);
        }
    }
    DistributionKernel t(d_, std::move(out));
    t.quad_ = quad_;
    if (declared_sd_) t.declared_sd_ = *declared_sd_ + order(alpha);
    return t;
}

DistributionKernel DistributionKernel::multiply_smooth(const Expr& f) const {
    require(f.arity() <= d_, "multiplier uses more variables than the dimension");
    std::vector<Component> out;
    for (const auto& c : components_) {
        Component n = c;
        if (order(c.beta) == 0)
            n.inner = c.inner * f;
        else
            n.outer = c.outer ? *c.outer * f : f;
        out.push_back(n);
    }
    DistributionKernel t(d_, std::move(out));
    t.quad_ = quad_;
    t.declared_sd_ = declared_sd_;
    return t;
}

DistributionKernel DistributionKernel::multiply_monomial(const MultiIndex& alpha) const {
    require(static_cast<int>(alpha.size()) == d_, "monomial multi-index has wrong dimension");
    DistributionKernel t = multiply_smooth(Expr::monomial(alpha));
    for (std::size_t i = 0; i < t.components_.size(); ++i) {
        auto& c = t.components_[i];
        if (order(c.beta) != 0) continue;
        for (std::size_t b = 0; b < c.blocks.size(); ++b) {
            int drop = 0;
            for (int j : c.blocks[b]) drop += alpha[static_cast<std::size_t>(j)];
            c.block_sd[b] -= drop;
        }
    }
    if (declared_sd_) t.declared_sd_ = *declared_sd_ - order(alpha);
    return t;
}

DistributionKernel DistributionKernel::scaled(double a) const {
    DistributionKernel t = *this;
    for (auto& c : t.components_) c.coeff *= a;
    return t;
}

DistributionKernel DistributionKernel::rescaled(double lambda, const std::vector<int>& coords) const {
    require(lambda > 0.0 && std::isfinite(lambda), "scale factor must be positive");
    std::vector<char> in(static_cast<std::size_t>(d_), coords.empty() ? 1 : 0);
    for (int i : coords) {
        require(i >= 0 && i < d_, "rescaled coordinate out of range");
        in[static_cast<std::size_t>(i)] = 1;
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d_, d_);
    for (int i = 0; i < d_; ++i)
        if (in[static_cast<std::size_t>(i)]) m(i, i) = lambda;
    DistributionKernel t = *this;
    for (auto& c : t.components_) {
        c.inner = c.inner.linear_substitute(m);
        if (c.outer) c.outer = c.outer->linear_substitute(m);
        int power = 0;
        for (int i = 0; i < d_; ++i)
            if (in[static_cast<std::size_t>(i)]) power += c.beta[static_cast<std::size_t>(i)] + (c.pinned[static_cast<std::size_t>(i)] ? 1 : 0);
        c.coeff *= std::pow(lambda, -power);
    }
    return t;
}

DistributionKernel operator+(const DistributionKernel& a, const DistributionKernel& b) {
    require(a.d_ == b.d_, "sum of distributions of different dimension");
    auto comps = a.components_;
    comps.insert(comps.end(), b.components_.begin(), b.components_.end());
    DistributionKernel t(a.d_, std::move(comps));
    t.quad_ = a.quad_;
    if (a.declared_sd_ && b.declared_sd_) t.declared_sd_ = std::max(*a.declared_sd_, *b.declared_sd_);
    return t;
}

DistributionKernel tensor(const DistributionKernel& a, const DistributionKernel& b) {
    const int d1 = a.d_, d2 = b.d_;
    std::vector<DistributionKernel::Component> out;
    for (const auto& ca : a.components_)
        for (const auto& cb : b.components_) {
            DistributionKernel::Component c;
            c.coeff = ca.coeff * cb.coeff;
            c.inner = ca.inner * cb.inner.shifted(d1);
            if (ca.outer || cb.outer) {
                const Expr fa = ca.outer ? *ca.outer : Expr::constant(1.0);
                const Expr fb = cb.outer ? cb.outer->shifted(d1) : Expr::constant(1.0);
                c.outer = fa * fb;
            }
            c.beta = ca.beta;
            c.beta.insert(c.beta.end(), cb.beta.begin(), cb.beta.end());
            c.pinned = ca.pinned;
            c.pinned.insert(c.pinned.end(), cb.pinned.begin(), cb.pinned.end());
            c.blocks = ca.blocks;
            for (auto blk : cb.blocks) {
                for (int& j : blk) j += d1;
                c.blocks.push_back(blk);
            }
            c.block_sd = ca.block_sd;
            c.block_sd.insert(c.block_sd.end(), cb.block_sd.begin(), cb.block_sd.end());
            c.block_smooth = ca.block_smooth;
            c.block_smooth.insert(c.block_smooth.end(), cb.block_smooth.begin(), cb.block_smooth.end());
            out.push_back(std::move(c));
        }
    DistributionKernel t(d1 + d2, std::move(out));
    t.quad_ = a.quad_;
    if (a.declared_sd_ && b.declared_sd_) t.declared_sd_ = *a.declared_sd_ + *b.declared_sd_;
    return t;
}

// ------------------------------------------------------------ inspection

double DistributionKernel::regular_value(std::span<const double> x) const {
    require(static_cast<int>(x.size()) == d_, "point has wrong dimension");
    double v = 0.0;
    for (const auto& c : components_) {
        bool any_pinned = false;
        for (bool p : c.pinned) any_pinned = any_pinned || p;
        if (any_pinned) continue;
        const double k = c.inner.derivative(c.beta).eval(x.data());
        const double f = c.outer ? c.outer->eval(x.data()) : 1.0;
        v += c.coeff * f * k;
    }
    return v;
}

double DistributionKernel::integrand_singular_degree() const {
    double s = -kInf;
    for (const auto& c : components_)
        for (double b : c.block_sd) s = std::max(s, b);
    return s;
}

bool DistributionKernel::is_delta_only() const {
    for (const auto& c : components_)
        if (!c.blocks.empty() && c.coeff != 0.0) return false;
    return true;
}

bool DistributionKernel::locally_integrable() const {
    for (const auto& c : components_)
        for (std::size_t b = 0; b < c.blocks.size(); ++b)
            if (c.block_sd[b] >= static_cast<double>(c.blocks[b].size())) return false;
    return true;
}

std::vector<std::pair<MultiIndex, double>> DistributionKernel::delta_part() const {
    std::vector<std::pair<MultiIndex, double>> acc;
    auto add_term = [&](const MultiIndex& g, double v) {
        for (auto& [a, c] : acc)
            if (a == g) {
                c += v;
                return;
            }
        acc.push_back({g, v});
    };
    const std::vector<double> zero(static_cast<std::size_t>(d_), 0.0);
    for (const auto& c : components_) {
        if (!c.blocks.empty() || c.coeff == 0.0) continue;
        const double k0 = c.inner.eval(zero.data());
        const int ob = order(c.beta);
        const double sign = (ob % 2 == 0) ? 1.0 : -1.0;
        // coefficient of d^gamma phi(0) is sum C(beta,gamma) d^{beta-gamma}F(0)
        std::optional<Jet> fj;
        if (c.outer) {
            const JetLayout& L = JetLayout::get(d_, ob);
            std::vector<Jet> v;
            for (int i = 0; i < d_; ++i) v.push_back(Jet::variable(L, i, 0.0));
            fj = c.outer->eval(v.data());
        }
        for (const auto& gamma : sub_indices(c.beta)) {
            MultiIndex rest = c.beta;
            for (std::size_t i = 0; i < rest.size(); ++i) rest[i] -= gamma[i];
            const double fr = fj ? fj->derivative(rest) : (order(rest) == 0 ? 1.0 : 0.0);
            const double phi_coeff = c.coeff * sign * k0 * binomial(c.beta, gamma) * fr;
            if (phi_coeff == 0.0) continue;
            const double gsign = (order(gamma) % 2 == 0) ? 1.0 : -1.0;
            add_term(gamma, gsign * phi_coeff);
        }
    }
    std::vector<std::pair<MultiIndex, double>> out;
    double scale = 0.0;
    for (const auto& [a, c] : acc) scale = std::max(scale, std::fabs(c));
    for (const auto& [a, c] : acc)
        if (std::fabs(c) > 1e-14 * scale) out.push_back({a, c});
    std::sort(out.begin(), out.end(), [](const auto& p, const auto& q) {
        if (order(p.first) != order(q.first)) return order(p.first) < order(q.first);
        return p.first > q.first;
    });
    return out;
}

std::optional<double> DistributionKernel::exact_scaling_degree() const {
    if (!is_delta_only()) return std::nullopt;
    const auto terms = delta_part();
    if (terms.empty()) return std::nullopt;
    int m = 0;
    for (const auto& [a, c] : terms) m = std::max(m, order(a));
    return static_cast<double>(d_ + m);
}

// -------------------------------------------------------- scaling degree

DyadicScalingReport dyadic_scaling_fit(const std::function<PairingValue(std::size_t, double)>& pairing,
                                       std::size_t probe_count, const ScalingOptions& opt) {
    require(probe_count > 0, "scaling estimate needs at least one probe");
    require(opt.n_max >= 8, "n_max must be at least 8");
    DyadicScalingReport rep;
    rep.n_max = opt.n_max;
    bool any = false;
    const int tail_start = (opt.n_max + 1) / 2;
    for (std::size_t i = 0; i < probe_count; ++i) {
        ProbeFit fit;
        for (int n = 0; n <= opt.n_max; ++n) {
            const double lambda = std::ldexp(1.0, -n);
            const PairingValue v = pairing(i, lambda);
            ScalingSample s;
            s.n = n;
            s.lambda = lambda;
            s.abs_value = std::fabs(v.value);
            s.error = v.error;
            s.informative = std::isfinite(v.value) && s.abs_value > 0.0 &&
                            s.abs_value > opt.noise_factor * v.error &&
                            s.abs_value > opt.relative_floor * v.magnitude;
            fit.samples.push_back(s);
        }
        std::vector<double> xs, ys;
        for (const auto& s : fit.samples)
            if (s.n >= tail_start && s.informative) {
                xs.push_back(std::log(s.lambda));
                ys.push_back(std::log(s.abs_value));
            }
        if (xs.size() >= 3) {
            const double n = static_cast<double>(xs.size());
            double mx = 0, my = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                mx += xs[j];
                my += ys[j];
            }
            mx /= n;
            my /= n;
            double sxx = 0, sxy = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                sxx += (xs[j] - mx) * (xs[j] - mx);
                sxy += (xs[j] - mx) * (ys[j] - my);
            }
            fit.slope = sxy / sxx;
            double rss = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                const double r = ys[j] - (my + fit.slope * (xs[j] - mx));
                rss += r * r;
            }
            fit.residual = std::sqrt(rss / n);
            fit.informative = true;
            if (!any || -fit.slope > rep.estimate) {
                rep.estimate = -fit.slope;
                rep.residual = fit.residual;
            }
            any = true;
        }
        rep.probes.push_back(std::move(fit));
    }
    if (!any)
        fail(ErrorKind::Inconclusive, "every probe pairing is zero or below the noise floor on the tail samples");
    return rep;
}

DyadicScalingReport scaling_degree_estimate(const Distribution& t, const std::vector<TestFunction>& probes,
                                            const ScalingOptions& opt) {
    require(!probes.empty(), "scaling estimate needs at least one probe");
    for (const auto& p : probes) require(p.dimension() == t.dimension(), "probe dimension mismatch");
    if (auto exact = t.exact_scaling_degree()) {
        DyadicScalingReport rep;
        try {
            rep = dyadic_scaling_fit([&](std::size_t i, double lambda) { return t.pair(probes[i].dilated(lambda)); },
                                     probes.size(), opt);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Inconclusive) throw;
            rep.n_max = opt.n_max;
        }
        rep.exact = true;
        rep.estimate = *exact;
        rep.residual = 0.0;
        return rep;
    }
    if (const auto* k = dynamic_cast<const DistributionKernel*>(&t); k && k->is_delta_only())
        fail(ErrorKind::Inconclusive, "distribution is identically zero");
    return dyadic_scaling_fit([&](std::size_t i, double lambda) { return t.pair(probes[i].dilated(lambda)); },
                              probes.size(), opt);
}

DyadicScalingReport scaling_degree_estimate(const Distribution& t, const std::vector<TestFunction>& probes,
                                            int n_max) {
    ScalingOptions opt;
    opt.n_max = n_max;
    return scaling_degree_estimate(t, probes, opt);
}

std::vector<TestFunction> probes_for(const DistributionKernel& t) {
    return t.locally_integrable() ? default_probes(t.dimension()) : off_locus_probes(t.dimension());
}

// ----------------------------------------------------------- Fourier decay

std::vector<DecayReport> fourier_decay_probe(const Distribution& t, const TestFunction& chi,
                                             const std::vector<Eigen::VectorXd>& directions, int N,
                                             const FourierOptions& opt) {
    const int d = t.dimension();
    require(chi.dimension() == d, "window dimension mismatch");
    require(N >= 0, "decay order must be nonnegative");
    const double s_max = opt.s_max > 0 ? opt.s_max : (d == 1 ? 2048.0 : (d == 2 ? 256.0 : 64.0));
    require(s_max > opt.s_min && opt.s_min > 0 && opt.samples >= 4, "invalid frequency range");
    std::vector<DecayReport> out;
    for (const auto& raw : directions) {
        require(raw.size() == d && raw.norm() > 0, "direction must be a nonzero covector of the right dimension");
        DecayReport rep;
        rep.direction = raw / raw.norm();
        double max_err = 0.0;
        try {
            for (int i = 0; i < opt.samples; ++i) {
                const double s = opt.s_min * std::pow(s_max / opt.s_min, static_cast<double>(i) / (opt.samples - 1));
                const Eigen::VectorXd k = s * rep.direction;
                const PairingValue re = t.pair(chi.times(SmoothFactor::plane_wave(k, false)));
                const PairingValue im = t.pair(chi.times(SmoothFactor::plane_wave(k, true)));
                rep.s.push_back(s);
                rep.amplitude.push_back(std::hypot(re.value, im.value));
                max_err = std::max(max_err, re.error + im.error);
            }
        } catch (const Error& e) {
            rep.inconclusive = true;
            rep.note = e.what();
            out.push_back(rep);
            continue;
        }
        const std::size_t n = rep.s.size();
        std::vector<double> env(n);
        double run = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            run = std::max(run, rep.amplitude[i]);
            env[i] = run;
        }
        const double top = *std::max_element(rep.amplitude.begin(), rep.amplitude.end());
        const double floor = std::max(1e-11 * top, 10.0 * max_err);
        std::vector<double> xs, ys;
        for (std::size_t i = n / 2; i < n; ++i)
            if (env[i] > floor) {
                xs.push_back(std::log(rep.s[i]));
                ys.push_back(std::log(env[i]));
            }
        if (top == 0.0) {
            rep.rapid = true;
            rep.note = "transform vanishes identically";
        } else if (xs.size() < 3) {
            rep.rapid = true;
            rep.note = "envelope reaches the noise floor";
            // slope between the first sample and the first sample at the floor
            std::size_t j = 0;
            while (j < n && env[j] > floor) ++j;
            j = std::min(j, n - 1);
            rep.exponent = -(std::log(std::max(env[j], floor)) - std::log(env[0])) / (std::log(rep.s[j]) - std::log(rep.s[0]));
        } else {
            const double m = static_cast<double>(xs.size());
            double mx = 0, my = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                mx += xs[j];
                my += ys[j];
            }
            mx /= m;
            my /= m;
            double sxx = 0, sxy = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                sxx += (xs[j] - mx) * (xs[j] - mx);
                sxy += (xs[j] - mx) * (ys[j] - my);
            }
            rep.exponent = -sxy / sxx;
            rep.rapid = rep.exponent > N;
        }
        out.push_back(rep);
    }
    return out;
}

}  // namespace egren
