#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "egren/expr.hpp"
#include "egren/quadrature.hpp"
#include "egren/test_function.hpp"

namespace egren {

struct PairingValue {
    double value = 0.0;
    double error = 0.0;      // absolute
    double magnitude = 0.0;  // integral of |integrand|; scale for relative checks
};

// Anything that can be paired with test functions on R^d.
class Distribution {
public:
    virtual ~Distribution() = default;
    virtual int dimension() const = 0;
    virtual PairingValue pair(const TestFunction& phi) const = 0;
    // Closed-form scaling degree at the origin when the distribution is a
    // finite sum of delta derivatives.
    virtual std::optional<double> exact_scaling_degree() const { return std::nullopt; }
    virtual std::optional<double> declared_scaling_degree() const { return std::nullopt; }
};

// Distribution on R^d singular (at most) at the origin, held as a sum of
// components
//     c (-1)^{|beta|} \int K(y) d^beta(F phi)(y) dy
// where some coordinates may be pinned to 0 (delta factors) and the remaining
// ones are split into blocks, each integrated in polar coordinates about its
// own origin. A plain kernel is one block; tensor products keep the blocks of
// their factors.
class DistributionKernel final : public Distribution {
public:
    struct Component {
        double coeff = 1.0;
        Expr inner;                  // K
        std::optional<Expr> outer;   // F, absent means 1
        MultiIndex beta;
        std::vector<bool> pinned;
        std::vector<std::vector<int>> blocks;
        std::vector<double> block_sd;  // singular degree of K within each block
        // blocks on which K is smooth (the base of a chart): Cartesian rule
        // instead of polar coordinates
        std::vector<bool> block_smooth;
    };

    struct PairOptions {
        bool check_integrability = true;
        // Replaces block_sd for grading, e.g. when the test function vanishes
        // at the origin to a known order.
        std::optional<double> effective_sd;
    };

    DistributionKernel() = default;
    DistributionKernel(int d, std::vector<Component> components);

    static DistributionKernel regular(int d, const Expr& kernel, std::optional<double> declared_sd = std::nullopt);
    static DistributionKernel regular(int d, std::string_view dsl, std::optional<double> declared_sd = std::nullopt);
    // sum_alpha c_alpha d^alpha delta
    static DistributionKernel delta(int d, const std::vector<std::pair<MultiIndex, double>>& terms);

    int dimension() const override { return d_; }
    PairingValue pair(const TestFunction& phi) const override { return pair(phi, PairOptions{}); }
    PairingValue pair(const TestFunction& phi, const PairOptions& opt) const;
    std::optional<double> exact_scaling_degree() const override;
    std::optional<double> declared_scaling_degree() const override { return declared_sd_; }

    void set_declared_scaling_degree(std::optional<double> sd) { declared_sd_ = sd; }
    void set_quadrature(const QuadratureConfig& q) { quad_ = q; }
    const QuadratureConfig& quadrature() const { return quad_; }
    const std::vector<Component>& components() const { return components_; }

    // Value of the regular part at a point off the origin.
    double regular_value(std::span<const double> x) const;
    // Singular degree of the integrand kernels (max over components/blocks)
    // when every block is the whole space; used as the integrability proxy.
    double integrand_singular_degree() const;
    bool is_delta_only() const;
    // Delta part as sum_gamma e_gamma d^gamma delta, from fully pinned components.
    std::vector<std::pair<MultiIndex, double>> delta_part() const;
    bool locally_integrable() const;

    DistributionKernel derive(const MultiIndex& alpha) const;
    DistributionKernel multiply_monomial(const MultiIndex& alpha) const;
    DistributionKernel multiply_smooth(const Expr& f) const;
    DistributionKernel scaled(double a) const;
    // y -> t(y') with y'_i = lambda y_i for i in coords (all when empty); the
    // pairing identity <t(lambda .), phi> = lambda^{-d} <t, phi(./lambda)> holds
    // block by block.
    DistributionKernel rescaled(double lambda, const std::vector<int>& coords = {}) const;
    friend DistributionKernel operator+(const DistributionKernel& a, const DistributionKernel& b);
    friend DistributionKernel tensor(const DistributionKernel& a, const DistributionKernel& b);

private:
    Estimate integrate_component(const Component& c, const TestFunction& phi, const PairOptions& opt) const;
    Estimate integrate_blocks(const Component& c, const TestFunction& phi, const PairOptions& opt,
                              const QuadratureConfig& q) const;

    int d_ = 0;
    std::vector<Component> components_;
    std::optional<double> declared_sd_;
    QuadratureConfig quad_;
};

DistributionKernel tensor(const DistributionKernel& a, const DistributionKernel& b);

// ------------------------------------------------------------ scaling degree

struct ScalingSample {
    int n = 0;
    double lambda = 1.0;
    double abs_value = 0.0;  // |<t_lambda, phi>|
    double error = 0.0;
    bool informative = true;
};

struct ProbeFit {
    std::vector<ScalingSample> samples;
    double slope = 0.0;
    double residual = 0.0;
    bool informative = false;
};

struct DyadicScalingReport {
    std::vector<ProbeFit> probes;
    double estimate = 0.0;  // max over informative probes of -slope
    double residual = 0.0;  // fit residual of the maximizing probe
    bool exact = false;     // closed-form delta path
    int n_max = 0;
};

struct ScalingOptions {
    int n_max = 60;
    double noise_factor = 10.0;     // samples with |v| <= noise_factor * err are dropped
    double relative_floor = 1e-10;  // ... or with |v| <= relative_floor * magnitude
};

// Fits log|<t, phi^lambda_n>| against log lambda_n, lambda_n = 2^-n, on the
// tail half of n = 0..n_max. `pairing(i, lambda)` pairs with probe i.
DyadicScalingReport dyadic_scaling_fit(const std::function<PairingValue(std::size_t, double)>& pairing,
                                       std::size_t probe_count, const ScalingOptions& opt);

DyadicScalingReport scaling_degree_estimate(const Distribution& t, const std::vector<TestFunction>& probes,
                                            const ScalingOptions& opt = {});
DyadicScalingReport scaling_degree_estimate(const Distribution& t, const std::vector<TestFunction>& probes,
                                            int n_max);
// Default probes, or off-locus probes when the kernel is not locally integrable.
std::vector<TestFunction> probes_for(const DistributionKernel& t);

// ---------------------------------------------------------- Fourier decay

struct DecayReport {
    Eigen::VectorXd direction;
    std::vector<double> s;          // |k| along the ray
    std::vector<double> amplitude;  // |F(chi t)(s xi)|
    double exponent = 0.0;          // fitted decay rate of the running envelope
    bool rapid = false;             // faster than |k|^-N on the sampled range
    bool inconclusive = false;
    std::string note;
};

struct FourierOptions {
    double s_min = 4.0;
    double s_max = 0.0;  // 0 picks a default from the dimension
    int samples = 16;
};

std::vector<DecayReport> fourier_decay_probe(const Distribution& t, const TestFunction& chi,
                                             const std::vector<Eigen::VectorXd>& directions, int N,
                                             const FourierOptions& opt = {});

}  // namespace egren
