#include "egren/extension.hpp"

#include <cmath>

#include <fmt/format.h>

#include "egren/errors.hpp"

namespace egren {

namespace {

double snap(double sd) {
    const double r = std::round(sd);
    return std::fabs(sd - r) < 1e-6 ? r : sd;
}

int floor_order(double sd, int n) { return static_cast<int>(std::floor(sd - n + 1e-12)); }

}  // namespace

// ---------------------------------------------------------------- W operator

TestFunction WOperator::base_weight() const { return TestFunction::cutoff(d, weight, scale); }

TestFunction WOperator::weight_alpha(const MultiIndex& alpha) const {
    require(static_cast<int>(alpha.size()) == d && order(alpha) <= rho, "weight index out of range");
    return base_weight().times(SmoothFactor::monomial(alpha, true));
}

TestFunction WOperator::apply(const TestFunction& phi) const {
    require(phi.dimension() == d, "test function dimension does not match the W operator");
    return phi.w_subtracted(base_weight(), rho, flat_radius());
}

WOperator build_w_operator(int d, double rho, const CutoffFamily& weight) {
    require(d >= 1, "dimension must be positive");
    require(std::isfinite(rho) && rho >= 0.0, "W order must be a nonnegative number");
    require(weight.eps > 0.0 && weight.R > weight.eps, "weight needs 0 < eps < R");
    WOperator w;
    w.d = d;
    w.rho = static_cast<int>(std::floor(rho + 1e-12));
    w.weight = weight;
    w.indices = multi_indices_up_to(d, w.rho);
    return w;
}

long ambiguity_dimension(int n, double sd) {
    require(n >= 1 && std::isfinite(sd), "ambiguity dimension needs n >= 1 and finite sd");
    if (sd < n) return 0;
    const int rho = floor_order(sd, n);
    return static_cast<long>(choose(static_cast<std::uint64_t>(rho + n), static_cast<std::uint64_t>(n)));
}

// ----------------------------------------------------------------- surfaces

SurfaceFibration SurfaceFibration::total_diagonal(int d, int n) {
    require(d >= 1 && n >= 2, "total diagonal needs d >= 1 and n >= 2");
    SurfaceFibration f;
    f.d = d;
    f.n = n;
    return f;
}

SurfaceFibration SurfaceFibration::with_shear(const Eigen::MatrixXd& m) const {
    require(m.rows() == d && m.cols() == codimension(), "shear must be d x d(n-1)");
    SurfaceFibration f = *this;
    f.shear = m;
    return f;
}

Eigen::MatrixXd SurfaceFibration::chart() const {
    const int D = total_dimension(), c = codimension();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(D, D);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) L(i * d + j, j) = 1.0;
    for (int k = 0; k < n - 1; ++k)
        for (int j = 0; j < d; ++j) {
            const int col = d + k * d + j;
            L(k * d + j, col) += 1.0;
            L((n - 1) * d + j, col) -= 1.0;
        }
    if (shear.size() > 0)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                for (int q = 0; q < c; ++q) L(i * d + j, d + q) += shear(j, q);
    return L;
}

std::vector<int> SurfaceFibration::base_coords() const {
    std::vector<int> v;
    for (int j = 0; j < d; ++j) v.push_back(j);
    return v;
}

std::vector<int> SurfaceFibration::fiber_coords() const {
    std::vector<int> v;
    for (int j = d; j < total_dimension(); ++j) v.push_back(j);
    return v;
}

namespace {

QuadratureConfig chart_quadrature(int D) {
    QuadratureConfig q;
    if (D >= 5) {
        // two nested blocks of dimension >= 3: keep the product rules small
        q.rel_tol = 1e-6;
        q.sphere_order = 4;
        q.box_order = 6;
        q.radial_fixed_order = 12;
    }
    return q;
}

}  // namespace

DistributionKernel chart_kernel(const DistributionKernel& t, const SurfaceFibration& fib) {
    const int D = fib.total_dimension();
    require(t.dimension() == D, fmt::format("kernel dimension {} does not match the fibration ({})", t.dimension(), D));
    const Eigen::MatrixXd L = fib.chart();
    const double det = std::fabs(L.determinant());
    require(det > 0.0, "fibration chart is singular");
    const auto base = fib.base_coords(), fiber = fib.fiber_coords();
    Eigen::MatrixXd base_span = Eigen::MatrixXd::Zero(D, fib.d);
    Eigen::MatrixXd fiber_span = Eigen::MatrixXd::Zero(D, fib.codimension());
    for (int j = 0; j < fib.d; ++j) base_span(j, j) = 1.0;
    for (int j = 0; j < fib.codimension(); ++j) fiber_span(fib.d + j, j) = 1.0;
    std::vector<DistributionKernel::Component> comps;
    for (const auto& c : t.components()) {
        bool plain = order(c.beta) == 0 && c.blocks.size() == 1 && static_cast<int>(c.blocks[0].size()) == D;
        for (bool p : c.pinned) plain = plain && !p;
        require(plain, "surface mode needs a plain kernel without derivative or delta factors");
        DistributionKernel::Component n;
        n.coeff = c.coeff * det;
        n.inner = c.inner.linear_substitute(L);
        if (c.outer) n.outer = c.outer->linear_substitute(L);
        n.beta = zero_index(D);
        n.pinned.assign(static_cast<std::size_t>(D), false);
        n.blocks = {base, fiber};
        n.block_sd = {std::max(0.0, n.inner.singular_degree(fiber_span)), n.inner.singular_degree(base_span)};
        n.block_smooth = {true, false};
        comps.push_back(std::move(n));
    }
    DistributionKernel k(D, std::move(comps));
    k.set_quadrature(chart_quadrature(D));
    return k;
}

std::vector<TestFunction> surface_probes(const SurfaceFibration& fib, bool on_surface) {
    const int D = fib.total_dimension();
    if (on_surface) return default_probes(D);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(D), c2 = Eigen::VectorXd::Zero(D);
    c[fib.d] = 0.5;
    c2[D - 1] = -0.6;
    const std::vector<std::pair<MultiIndex, double>> u{{unit_index(D, fib.d), 1.0}};
    return {TestFunction::bump(c, 0.25), TestFunction::bump(c2, 0.3), TestFunction::bump(c, 0.25, u)};
}

DyadicScalingReport transversal_scaling_degree(const DistributionKernel& t, const SurfaceFibration& fib,
                                               const std::vector<TestFunction>& probes, const ScalingOptions& opt) {
    require(!probes.empty(), "scaling estimate needs at least one probe");
    const DistributionKernel K = chart_kernel(t, fib);
    for (const auto& p : probes) require(p.dimension() == K.dimension(), "probe dimension mismatch");
    const auto fiber = fib.fiber_coords();
    return dyadic_scaling_fit([&](std::size_t i, double lambda) { return K.rescaled(lambda, fiber).pair(probes[i]); },
                              probes.size(), opt);
}

// ---------------------------------------------------------------- extension

ExtensionResult make_extension(const DistributionKernel& t0, std::optional<SurfaceFibration> fib, double sd,
                               std::optional<WOperator> W, std::vector<std::pair<MultiIndex, double>> constants,
                               const ExtensionOptions& opt) {
    require(opt.cutoff.eps > 0.0 && opt.cutoff.R > opt.cutoff.eps, "cutoff needs 0 < eps < R");
    require(opt.n_max >= 1, "n_max must be positive");
    ExtensionResult e;
    e.opt_ = opt;
    e.sd_ = sd;
    if (fib) {
        e.K_ = chart_kernel(t0, *fib);
        e.L_ = fib->chart();
        e.base_ = fib->base_coords();
        e.fiber_ = fib->fiber_coords();
        e.dim_ = fib->total_dimension();
        e.fib_ = fib;
    } else {
        e.K_ = t0;
        e.dim_ = t0.dimension();
        for (int i = 0; i < e.dim_; ++i) e.fiber_.push_back(i);
    }
    const int codim = static_cast<int>(e.fiber_.size());
    e.ambiguity_ = ambiguity_dimension(codim, sd);
    if (sd < codim) {
        e.mode_ = ExtensionMode::Unique;
        return e;
    }
    e.mode_ = ExtensionMode::Ambiguous;
    e.rho_ = floor_order(sd, codim);
    require(W.has_value(), "ambiguous extension needs a W operator");
    require(W->d == codim, "W operator dimension does not match the codimension");
    if (W->rho != e.rho_)
        fail(ErrorKind::OrderMismatch,
             fmt::format("W operator has order {} but floor(sd - {}) = {} for sd = {}", W->rho, codim, e.rho_, sd));
    for (const auto& [alpha, c] : constants) {
        require(static_cast<int>(alpha.size()) == codim, "constant multi-index has wrong dimension");
        if (order(alpha) > e.rho_)
            fail(ErrorKind::OrderMismatch, fmt::format("constant for |alpha| = {} exceeds rho = {}", order(alpha), e.rho_));
    }
    e.W_ = W;
    for (const auto& alpha : W->indices) {
        double v = 0.0;
        for (const auto& [a, c] : constants)
            if (a == alpha) v += c;
        e.constants_.push_back({alpha, v});
    }
    e.build_constant_kernel();
    return e;
}

void ExtensionResult::build_constant_kernel() {
    const int codim = codimension();
    std::vector<DistributionKernel::Component> comps;
    for (const auto& [alpha, c] : constants_) {
        if (c == 0.0) continue;
        DistributionKernel::Component k;
        k.beta = zero_index(dim_);
        for (int j = 0; j < codim; ++j) k.beta[static_cast<std::size_t>(fiber_[static_cast<std::size_t>(j)])] = alpha[static_cast<std::size_t>(j)];
        // pairing of the component is coeff (-1)^{|alpha|} \int d^alpha psi(x, 0) dx
        const double sign = order(alpha) % 2 == 0 ? 1.0 : -1.0;
        k.coeff = sign * c * std::pow(lambda_, -(codim + order(alpha)));
        k.inner = Expr::constant(1.0);
        k.pinned.assign(static_cast<std::size_t>(dim_), false);
        for (int j : fiber_) k.pinned[static_cast<std::size_t>(j)] = true;
        if (!base_.empty()) {
            k.blocks.push_back(base_);
            k.block_sd.push_back(0.0);
        }
        comps.push_back(std::move(k));
    }
    C_ = DistributionKernel(dim_, std::move(comps));
    C_.set_quadrature(K_.quadrature());
}

bool ExtensionResult::misses_locus(const Support& s) const {
    if (s.balls.empty()) return true;
    if (!fib_ && s.r_min > 0.0) return true;
    for (const auto& b : s.balls) {
        double d2 = 0.0;
        for (int j : fiber_) d2 += b.center[j] * b.center[j];
        if (d2 < b.radius * b.radius) return false;
    }
    return true;
}

PairingValue ExtensionResult::pair(const TestFunction& phi) const {
    require(phi.dimension() == dim_, fmt::format("test function dimension {} does not match {}", phi.dimension(), dim_));
    if (!fib_) return pair_chart(phi);
    return pair_chart(phi.pullback(L_, Eigen::VectorXd::Zero(dim_)));
}

PairingValue ExtensionResult::pair_chart(const TestFunction& psi, SeriesInfo* info) const {
    require(psi.dimension() == dim_, "chart test function has wrong dimension");
    SeriesInfo local;
    SeriesInfo& si = info ? *info : local;
    si = SeriesInfo{};
    if (misses_locus(psi.support())) {
        si.direct = true;
        return K_.pair(psi);
    }
    if (mode_ == ExtensionMode::Unique) return telescope(psi, si);
    return subtracted(psi);
}

PairingValue ExtensionResult::telescope(const TestFunction& psi, SeriesInfo& si) const {
    const CutoffFamily& cut = opt_.cutoff;
    auto fiberwise = [&](SmoothFactor f) { return fib_ ? f.on_coordinates(fiber_) : f; };
    const Support sup = psi.support();
    double M = 0.0;
    for (const auto& b : sup.balls) {
        double c2 = 0.0;
        for (int j : fiber_) c2 += b.center[j] * b.center[j];
        M = std::max(M, std::sqrt(c2) + b.radius);
    }
    require(std::isfinite(M), "test function support is unbounded");

    PairingValue out = K_.pair(psi.times(fiberwise(SmoothFactor::cutoff_complement(cut, 1.0))));
    const int m0 = std::max(0, static_cast<int>(std::floor(std::log2(cut.eps / M))));
    si.first_shell = m0;
    const int codim = codimension();
    const double q = std::pow(2.0, sd_ - codim);
    double sum = out.value, prev = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> terms;
    for (int j = 0; j < opt_.n_max; ++j) {
        const double s1 = std::ldexp(1.0, m0 + j);
        const PairingValue t = K_.pair(psi.times(fiberwise(SmoothFactor::cutoff_difference(cut, s1, 2.0 * s1))));
        sum += t.value;
        out.error += t.error;
        out.magnitude += t.magnitude;
        terms.push_back(t.value);
        si.shells = j + 1;
        si.last_term = t.value;
        si.extrapolated = false;
        si.tail = 0.0;
        // terms of a homogeneous singularity decay geometrically; add the tail
        // once the ratio has settled
        if (terms.size() >= 3) {
            const std::size_t n = terms.size();
            const double r1 = terms[n - 1] / terms[n - 2], r2 = terms[n - 2] / terms[n - 3];
            if (std::isfinite(r1) && std::isfinite(r2) && r1 > 0.0 && r1 < 1.0 && std::fabs(r1 - r2) <= 0.02) {
                si.extrapolated = true;
                si.tail = t.value * r1 / (1.0 - r1);
            }
        }
        si.tail_majorant = q < 1.0 ? std::fabs(t.value) * q / (1.0 - q) : std::numeric_limits<double>::infinity();
        const double est = sum + si.tail;
        const double change = std::fabs(est - prev);
        prev = est;
        const double scale = std::max(std::fabs(est), 1e-6 * out.magnitude);
        si.uncertainty = si.extrapolated ? change : si.tail_majorant;
        if (j >= 2 && std::fabs(t.value) <= opt_.stop_rel * scale) {
            si.uncertainty = std::min(si.uncertainty, si.tail_majorant);
            break;
        }
        if (si.extrapolated && change <= opt_.stop_rel * scale) break;
    }
    out.value = sum + si.tail;
    out.error += si.uncertainty;
    const double scale = std::max(std::fabs(out.value), 1e-6 * out.magnitude);
    if (!(si.uncertainty <= opt_.tail_tol * scale))
        fail(ErrorKind::NotConverged,
             fmt::format("cutoff series not converged after {} shells: tail uncertainty {} at value {}", si.shells,
                         si.uncertainty, out.value));
    return out;
}

PairingValue ExtensionResult::subtracted(const TestFunction& psi) const {
    TestFunction wpsi;
    if (!fib_) {
        wpsi = W_->apply(psi);
    } else {
        wpsi = psi.w_subtracted_fiber(SmoothFactor::cutoff(W_->weight, W_->scale).on_coordinates(fiber_), rho_, fiber_);
    }
    DistributionKernel::PairOptions po;
    po.check_integrability = false;
    po.effective_sd = sd_ - rho_ - 1;
    PairingValue out = K_.pair(wpsi, po);
    if (!C_.components().empty()) {
        const PairingValue c = C_.pair(psi);
        out.value += c.value;
        out.error += c.error;
        out.magnitude += c.magnitude;
    }
    return out;
}

ExtensionResult ExtensionResult::transversally_scaled(double lambda) const {
    require(lambda > 0.0 && std::isfinite(lambda), "scale factor must be positive");
    ExtensionResult e = *this;
    e.K_ = K_.rescaled(lambda, fiber_);
    e.lambda_ = lambda_ * lambda;
    if (e.W_) e.W_->scale = W_->scale * lambda;
    if (mode_ == ExtensionMode::Ambiguous) e.build_constant_kernel();
    return e;
}

double extension_scaling_degree(const DistributionKernel& t0, const ExtensionOptions& opt) {
    if (opt.sd) return *opt.sd;
    return snap(scaling_degree_estimate(t0, probes_for(t0), opt.scaling).estimate);
}

ExtensionResult extend_unique(const DistributionKernel& t0, const ExtensionOptions& opt) {
    const double sd = extension_scaling_degree(t0, opt);
    if (sd >= t0.dimension())
        fail(ErrorKind::NeedsSubtraction,
             fmt::format("scaling degree {} >= dimension {}: the extension is not unique and needs a W operator", sd,
                         t0.dimension()));
    return make_extension(t0, std::nullopt, sd, std::nullopt, {}, opt);
}

ExtensionResult extend_with_w(const DistributionKernel& t0, const WOperator& W,
                              const std::vector<std::pair<MultiIndex, double>>& constants,
                              const ExtensionOptions& opt) {
    require(W.d == t0.dimension(), "W operator dimension does not match the distribution");
    const double sd = extension_scaling_degree(t0, opt);
    if (!(sd >= t0.dimension()))
        fail(ErrorKind::OrderMismatch,
             fmt::format("scaling degree {} < dimension {}: no subtraction of order {} applies", sd, t0.dimension(),
                         W.rho));
    return make_extension(t0, std::nullopt, sd, W, constants, opt);
}

ExtensionResult extend_at_surface(const DistributionKernel& t0, const SurfaceFibration& fib,
                                  const ExtensionOptions& opt, const CutoffFamily& weight,
                                  const std::vector<std::pair<MultiIndex, double>>& constants) {
    const int codim = fib.codimension();
    double sd;
    if (opt.sd) {
        sd = *opt.sd;
    } else {
        const DistributionKernel K = chart_kernel(t0, fib);
        double fiber_sd = 0.0;
        for (const auto& c : K.components()) fiber_sd = std::max(fiber_sd, c.block_sd[1]);
        sd = snap(transversal_scaling_degree(t0, fib, surface_probes(fib, fiber_sd < codim), opt.scaling).estimate);
    }
    std::optional<WOperator> W;
    if (sd >= codim) W = build_w_operator(codim, sd - codim, weight);
    return make_extension(t0, fib, sd, W, constants, opt);
}

DyadicScalingReport transversal_scaling_degree(const ExtensionResult& t, const std::vector<TestFunction>& probes,
                                               const ScalingOptions& opt) {
    require(!probes.empty(), "scaling estimate needs at least one probe");
    for (const auto& p : probes) require(p.dimension() == t.dimension(), "probe dimension mismatch");
    return dyadic_scaling_fit(
        [&](std::size_t i, double lambda) { return t.transversally_scaled(lambda).pair_chart(probes[i]); },
        probes.size(), opt);
}

}  // namespace egren
