#include "egren/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "egren/errors.hpp"

namespace egren {

namespace {

struct GK15 {
    double x[15];
    double wk[15];
    double wg[15];  // zero on Kronrod-only nodes
};

const GK15& gk15() {
    static const GK15 rule = [] {
        using K = boost::math::quadrature::gauss_kronrod<double, 15>;
        using G = boost::math::quadrature::gauss<double, 7>;
        const auto& ax = K::abscissa();
        const auto& wk = K::weights();
        const auto& gw = G::weights();
        GK15 r{};
        int n = 0;
        // abscissae are nonnegative and ascending; even positions are Gauss nodes
        for (std::size_t i = 0; i < ax.size(); ++i) {
            const double g = (i % 2 == 0) ? gw[i / 2] : 0.0;
            r.x[n] = ax[i];
            r.wk[n] = wk[i];
            r.wg[n] = g;
            ++n;
            if (i > 0) {
                r.x[n] = -ax[i];
                r.wk[n] = wk[i];
                r.wg[n] = g;
                ++n;
            }
        }
        return r;
    }();
    return rule;
}

struct Panel {
    double a, b;
    int depth;
    Estimate est;   // est.error holds the outer GK error only
    double inner_error;
    long order;     // insertion sequence, for deterministic tie-breaks
};

Panel evaluate(const std::function<Estimate(double)>& f, double a, double b, int depth, long order) {
    const GK15& r = gk15();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    double k = 0.0, g = 0.0, mag = 0.0, inner = 0.0;
    for (int i = 0; i < 15; ++i) {
        const Estimate e = f(c + h * r.x[i]);
        fv[i] = e.value;
        k += r.wk[i] * e.value;
        g += r.wg[i] * e.value;
        mag += r.wk[i] * e.magnitude;
        inner += r.wk[i] * e.error;
    }
    const double mean = 0.5 * k;
    double asc = 0.0;
    for (int i = 0; i < 15; ++i) asc += r.wk[i] * std::fabs(fv[i] - mean);
    k *= h;
    g *= h;
    mag *= std::fabs(h);
    asc *= std::fabs(h);
    inner *= std::fabs(h);
    double err = std::fabs(k - g);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * mag);
    if (!std::isfinite(k)) err = std::numeric_limits<double>::infinity();
    return Panel{a, b, depth, Estimate{k, err, mag, true}, inner, order};
}

struct ByError {
    bool operator()(const Panel& p, const Panel& q) const {
        if (p.est.error != q.est.error) return p.est.error < q.est.error;
        return p.order > q.order;
    }
};

}  // namespace

Estimate integrate(const std::function<Estimate(double)>& f, double a, double b, const QuadratureConfig& cfg) {
    if (a == b) return {};
    long seq = 0;
    std::priority_queue<Panel, std::vector<Panel>, ByError> open;
    std::vector<Panel> done;
    double total_err = 0.0, total_mag = 0.0;
    {
        Panel p = evaluate(f, a, b, 0, seq++);
        total_err = p.est.error;
        total_mag = p.est.magnitude;
        open.push(p);
    }
    bool converged = true;
    int panels = 1;
    while (!open.empty()) {
        const double tol = std::max(cfg.abs_tol, cfg.rel_tol * total_mag);
        if (total_err <= tol) break;
        if (!std::isfinite(total_err) && panels > cfg.max_intervals) {
            converged = false;
            break;
        }
        if (panels >= cfg.max_intervals) {
            converged = false;
            break;
        }
        Panel p = open.top();
        open.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (p.depth >= cfg.max_depth || mid <= std::min(p.a, p.b) || mid >= std::max(p.a, p.b)) {
            done.push_back(p);
            continue;
        }
        Panel l = evaluate(f, p.a, mid, p.depth + 1, seq++);
        Panel r = evaluate(f, mid, p.b, p.depth + 1, seq++);
        total_err += l.est.error + r.est.error - p.est.error;
        total_mag += l.est.magnitude + r.est.magnitude - p.est.magnitude;
        open.push(l);
        open.push(r);
        ++panels;
    }
    while (!open.empty()) {
        done.push_back(open.top());
        open.pop();
    }
    std::sort(done.begin(), done.end(), [](const Panel& p, const Panel& q) { return p.a < q.a; });
    Estimate out;
    double outer_err = 0.0;
    for (const auto& p : done) {
        out.value += p.est.value;
        outer_err += p.est.error;
        out.magnitude += p.est.magnitude;
        out.error += p.inner_error;
    }
    out.error += outer_err;
    const double tol = std::max(cfg.abs_tol, cfg.rel_tol * out.magnitude);
    out.converged = (converged || outer_err <= 100.0 * tol) && std::isfinite(out.value);
    return out;
}

Estimate integrate(const std::function<double(double)>& f, double a, double b, const QuadratureConfig& cfg) {
    return integrate(
        [&](double x) {
            const double v = f(x);
            return Estimate{v, 0.0, std::fabs(v), true};
        },
        a, b, cfg);
}

const FixedRule& gauss_legendre(int n) {
    require(n >= 1 && n <= 200, "Gauss-Legendre order out of range");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<FixedRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (slot) return *slot;
    auto r = std::make_unique<FixedRule>();
    r->nodes.resize(static_cast<std::size_t>(n));
    r->weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        r->nodes[static_cast<std::size_t>(i)] = x;
        r->weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    if (n == 1) {
        r->nodes[0] = 0.0;
        r->weights[0] = 2.0;
    }
    slot = std::move(r);
    return *slot;
}

double sphere_area(int k) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k);
}

const SphereRule& sphere_rule(int k, int order) {
    require(k >= 2 && order >= 1, "sphere rule needs k >= 2");
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<SphereRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{k, order}];
    if (slot) return *slot;
    auto rule = std::make_unique<SphereRule>();
    const int nphi = 2 * order;
    const FixedRule& gl = gauss_legendre(order);
    // hyperspherical angles theta_1..theta_{k-2} in [0, pi] with Jacobian
    // sin^{k-1-j} theta_j, and phi in [0, 2 pi) by the periodic trapezoid rule
    std::vector<int> idx(static_cast<std::size_t>(k - 2), 0);
    for (;;) {
        for (int p = 0; p < nphi; ++p) {
            const double phi = 2.0 * std::numbers::pi * (p + 0.5) / nphi;
            Eigen::VectorXd dir(k);
            double w = 2.0 * std::numbers::pi / nphi;
            double s = 1.0;
            for (int j = 0; j < k - 2; ++j) {
                const double u = gl.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
                const double th = 0.5 * std::numbers::pi * (u + 1.0);
                w *= 0.5 * std::numbers::pi * gl.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] *
                     std::pow(std::sin(th), k - 2 - j);
                dir[j] = s * std::cos(th);
                s *= std::sin(th);
            }
            dir[k - 2] = s * std::cos(phi);
            dir[k - 1] = s * std::sin(phi);
            rule->directions.push_back(dir);
            rule->weights.push_back(w);
        }
        int j = 0;
        while (j < k - 2 && ++idx[static_cast<std::size_t>(j)] == order) idx[static_cast<std::size_t>(j++)] = 0;
        if (j == k - 2) break;
    }
    slot = std::move(rule);
    return *slot;
}

}  // namespace egren
