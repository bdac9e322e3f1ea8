#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "egren/errors.hpp"
#include "egren/extension.hpp"

using namespace egren;
using boost::math::quadrature::tanh_sinh;

namespace {

double at(const TestFunction& f, double x) { return f(std::span<const double>(&x, 1)); }

TestFunction random_bump(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> U(-1, 1);
    Eigen::VectorXd c(d);
    for (int i = 0; i < d; ++i) c(i) = 0.4 * U(rng);
    MultiIndex x1 = zero_index(d);
    x1[0] = 1;
    return TestFunction::bump(c, 0.7 + 0.2 * U(rng), {{zero_index(d), 1.0}, {x1, U(rng)}});
}

}  // namespace

TEST_CASE("ambiguity dimension") {
    CHECK(ambiguity_dimension(4, 4.0) == 1);
    CHECK(ambiguity_dimension(4, 3.9) == 0);
    CHECK(ambiguity_dimension(4, 6.0) == 15);
    CHECK(ambiguity_dimension(1, 3.0) == 3);
}

TEST_CASE("unique extension of |x|^-1/2") {
    const auto t0 = DistributionKernel::regular(1, "abs(x1)^(-0.5)");
    const ExtensionResult e = extend_unique(t0);
    CHECK(e.mode() == ExtensionMode::Unique);
    CHECK(e.ambiguity_dim() == 0);
    const TestFunction g = TestFunction::bump1(0.1, 0.8, {1.0, -0.6});
    tanh_sinh<double> ts;
    auto k = [&](double x) { return std::pow(std::abs(x), -0.5) * at(g, x); };
    const double want = ts.integrate(k, -0.7, 0.0) + ts.integrate(k, 0.0, 0.9);
    CHECK(e.pair(g).value == doctest::Approx(want).epsilon(1e-6));

    const auto smooth = DistributionKernel::regular(1, "cos(x1)");
    CHECK(extend_unique(smooth).pair(g).value == doctest::Approx(smooth.pair(g).value).epsilon(1e-8));

    CHECK_THROWS_AS(extend_unique(DistributionKernel::regular(1, "abs(x1)^(-1)")), Error);
}

TEST_CASE("uniqueness under different cutoffs") {
    const auto t0 = DistributionKernel::regular(2, "(x1^2+x2^2)^(-0.75)");
    ExtensionOptions a, b;
    b.cutoff = CutoffFamily{0.3, 1.7};
    const ExtensionResult ea = extend_unique(t0, a), eb = extend_unique(t0, b);
    CHECK(ea.mode() == ExtensionMode::Unique);
    std::mt19937_64 rng(11);
    for (int p = 0; p < 5; ++p) {
        const TestFunction phi = random_bump(rng, 2);
        CHECK(ea.pair(phi).value == doctest::Approx(eb.pair(phi).value).epsilon(1e-6));
    }
    // off the locus the extension is t0 itself
    const TestFunction far = TestFunction::bump(Eigen::Vector2d(2.0, 1.0), 0.5);
    CHECK(ea.pair(far).value == t0.pair(far).value);
}

TEST_CASE("subtracted extension of 1/|x|") {
    const auto t0 = DistributionKernel::regular(1, "abs(x1)^(-1)");
    const ExtensionResult e1 = extend_with_w(t0, build_w_operator(1, 0), {{{0}, 0.0}});
    CHECK(e1.mode() == ExtensionMode::Ambiguous);
    CHECK(e1.ambiguity_dim() == 1);
    const TestFunction odd = TestFunction::bump1(0.0, 0.8, {0.0, 1.0});
    CHECK(std::abs(e1.pair(odd).value) < 1e-10);

    const ExtensionResult e2 = extend_with_w(t0, build_w_operator(1, 0, CutoffFamily{0.2, 0.6}), {{{0}, 0.0}});
    std::mt19937_64 rng(12);
    std::vector<double> ratios;
    for (int p = 0; p < 6; ++p) {
        const TestFunction phi = random_bump(rng, 1);
        const double phi0 = at(phi, 0.0);
        REQUIRE(std::abs(phi0) > 1e-3);
        ratios.push_back((e1.pair(phi).value - e2.pair(phi).value) / phi0);
    }
    for (double r : ratios) CHECK(r == doctest::Approx(ratios.front()).epsilon(1e-6));
    CHECK(std::abs(ratios.front()) > 1e-3);  // the two choices really differ

    // constants enter as c d^alpha phi(0)
    const ExtensionResult e3 = extend_with_w(t0, build_w_operator(1, 0), {{{0}, 2.5}});
    const TestFunction g = TestFunction::bump1(0.1, 0.9);
    CHECK(e3.pair(g).value - e1.pair(g).value == doctest::Approx(2.5 * at(g, 0.0)));

    const auto t3 = DistributionKernel::regular(1, "abs(x1)^(-3)");
    ExtensionOptions o;
    o.sd = 3.0;
    const ExtensionResult e4 = extend_with_w(t3, build_w_operator(1, 2), {}, o);
    CHECK(e4.ambiguity_dim() == 3);
    CHECK_THROWS(extend_with_w(t3, build_w_operator(1, 1), {}, o));
}

TEST_CASE("surface extension on the diagonal of R x R") {
    const auto fib = SurfaceFibration::total_diagonal(1, 2);
    CHECK(fib.codimension() == 1);
    const auto t0 = DistributionKernel::regular(2, "abs(x1-x2)^(-0.5)");
    const ExtensionResult e = extend_at_surface(t0, fib);
    CHECK(e.mode() == ExtensionMode::Unique);
    CHECK(e.input_sd() == doctest::Approx(0.5).epsilon(1e-6));
    const TestFunction p = TestFunction::bump(Eigen::Vector2d(0.1, -0.05), 0.9, {{{0, 0}, 1.0}, {{1, 0}, 0.3}});
    tanh_sinh<double> ts;
    auto g = [&](double u) {
        return ts.integrate([&](double s) { return p(Eigen::Vector2d(s + u / 2, s - u / 2)); }, -1.5, 1.5);
    };
    auto k = [&](double u) { return std::pow(std::abs(u), -0.5) * g(u); };
    const double want = ts.integrate(k, -2.0, 0.0) + ts.integrate(k, 0.0, 2.0);
    CHECK(e.pair(p).value == doctest::Approx(want).epsilon(1e-5));

    const ExtensionResult e2 = extend_at_surface(DistributionKernel::regular(2, "abs(x1-x2)^(-1)"), fib);
    CHECK(e2.mode() == ExtensionMode::Ambiguous);
    CHECK(e2.ambiguity_dim() == 1);

    const auto smooth = DistributionKernel::regular(2, "exp(-(x1-x2)^2)");
    CHECK(extend_at_surface(smooth, fib).pair(p).value == doctest::Approx(smooth.pair(p).value).epsilon(1e-7));
}

TEST_CASE("transversal scaling degree") {
    const auto fib = SurfaceFibration::total_diagonal(3, 2);
    const auto t = DistributionKernel::regular(6, "((x1-x4)^2+(x2-x5)^2+(x3-x6)^2)^(-0.5)");
    ScalingOptions so;
    so.n_max = 10;
    const auto r = transversal_scaling_degree(t, fib, surface_probes(fib, true), so);
    CHECK(r.estimate == doctest::Approx(1.0).epsilon(0.05));
    const auto s = DistributionKernel::regular(2, "cos(x1-x2)");
    const auto f1 = SurfaceFibration::total_diagonal(1, 2);
    CHECK(transversal_scaling_degree(s, f1, surface_probes(f1, true), so).estimate <= 0.05);
}
