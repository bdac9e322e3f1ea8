#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "egren/distribution.hpp"
#include "egren/multi_index.hpp"
#include "egren/test_function.hpp"

namespace egren {

// Taylor subtraction of order rho with weights w_alpha = w x^alpha/alpha!,
// w(x) = theta(scale x) built from a cutoff family (w == 1 on |x| <= eps/scale).
struct WOperator {
    int d = 1;
    int rho = 0;
    CutoffFamily weight;
    double scale = 1.0;
    std::vector<MultiIndex> indices;  // |alpha| <= rho, graded

    TestFunction base_weight() const;
    TestFunction weight_alpha(const MultiIndex& alpha) const;
    // phi - sum_alpha w_alpha d^alpha phi(0)
    TestFunction apply(const TestFunction& phi) const;
    double flat_radius() const { return weight.eps / scale; }
};

// rho is floored; negative rho is rejected.
WOperator build_w_operator(int d, double rho, const CutoffFamily& weight = {});

// Number of free constants: 0 when sd < n, else #{alpha in N^n : |alpha| <= floor(sd - n)}.
long ambiguity_dimension(int n, double sd);

// Total diagonal of (R^d)^n with chart y_i = x + xi_i + M eta, where
// xi_i = eta_i for i < n, xi_n = -(eta_1 + ... + eta_{n-1}), x is the centre
// of mass and M (d x d(n-1)) an optional shear of the complement.
struct SurfaceFibration {
    int d = 1;
    int n = 2;
    Eigen::MatrixXd shear;  // empty means zero

    static SurfaceFibration total_diagonal(int d, int n);
    SurfaceFibration with_shear(const Eigen::MatrixXd& m) const;
    int total_dimension() const { return d * n; }
    int codimension() const { return d * (n - 1); }
    Eigen::MatrixXd chart() const;  // y = L (x, eta)
    std::vector<int> base_coords() const;
    std::vector<int> fiber_coords() const;
};

// Kernel in chart coordinates (x, eta): K(x, eta) = |det L| t(L (x, eta)),
// integrated as a base block and a fiber block. Only plain regular kernels
// (no derivatives moved to the test function, no delta factors) are accepted.
DistributionKernel chart_kernel(const DistributionKernel& t, const SurfaceFibration& fib);

// Default probes in chart coordinates: bumps at the origin, or bumps kept away
// from the surface when the fiber singularity is not integrable.
std::vector<TestFunction> surface_probes(const SurfaceFibration& fib, bool on_surface);

// Scaling only the fiber: <t o alpha_C(x, lambda eta), psi>.
DyadicScalingReport transversal_scaling_degree(const DistributionKernel& t, const SurfaceFibration& fib,
                                               const std::vector<TestFunction>& probes,
                                               const ScalingOptions& opt = {});

enum class ExtensionMode { Unique, Ambiguous };

struct ExtensionOptions {
    CutoffFamily cutoff;        // theta of the telescoping series
    int n_max = 40;             // number of dyadic shells
    double stop_rel = 1e-10;    // stop when a term or the extrapolated tail change is below this
    double tail_tol = 1e-6;     // NotConverged when the remaining tail uncertainty exceeds this (relative)
    std::optional<double> sd;   // declared sd of t0; estimated when absent
    ScalingOptions scaling;     // used when sd is estimated
};

// Bookkeeping of one telescoping evaluation.
struct SeriesInfo {
    int first_shell = 0;
    int shells = 0;
    double last_term = 0.0;
    double tail = 0.0;           // extrapolated tail added to the partial sum
    double tail_majorant = 0.0;  // geometric majorant with ratio 2^{sd - codim}
    double uncertainty = 0.0;
    bool extrapolated = false;
    bool direct = false;         // support missed the locus
};

class ExtensionResult final : public Distribution {
public:
    ExtensionMode mode() const { return mode_; }
    long ambiguity_dim() const { return ambiguity_; }
    double input_sd() const { return sd_; }
    int rho() const { return rho_; }
    int codimension() const { return static_cast<int>(fiber_.size()); }
    bool surface() const { return fib_.has_value(); }
    const std::optional<SurfaceFibration>& fibration() const { return fib_; }
    const std::vector<std::pair<MultiIndex, double>>& constants() const { return constants_; }
    const DistributionKernel& kernel() const { return K_; }  // chart kernel in surface mode
    const std::optional<WOperator>& w_operator() const { return W_; }

    int dimension() const override { return dim_; }
    PairingValue pair(const TestFunction& phi) const override;
    std::optional<double> declared_scaling_degree() const override { return sd_; }

    // Pairing with a test function given in chart coordinates (the identity
    // chart in point mode).
    PairingValue pair_chart(const TestFunction& psi, SeriesInfo* info = nullptr) const;
    // Extension of the fiber-rescaled kernel K(x, lambda eta).
    ExtensionResult transversally_scaled(double lambda) const;

private:
    friend ExtensionResult make_extension(const DistributionKernel&, std::optional<SurfaceFibration>, double,
                                          std::optional<WOperator>, std::vector<std::pair<MultiIndex, double>>,
                                          const ExtensionOptions&);

    void build_constant_kernel();
    PairingValue telescope(const TestFunction& psi, SeriesInfo& info) const;
    PairingValue subtracted(const TestFunction& psi) const;
    bool misses_locus(const Support& s) const;

    ExtensionMode mode_ = ExtensionMode::Unique;
    DistributionKernel K_;
    std::optional<SurfaceFibration> fib_;
    Eigen::MatrixXd L_;
    std::vector<int> base_, fiber_;
    int dim_ = 0;
    double sd_ = 0.0;
    int rho_ = -1;
    long ambiguity_ = 0;
    std::optional<WOperator> W_;  // fiber weight in surface mode
    std::vector<std::pair<MultiIndex, double>> constants_;
    DistributionKernel C_;  // constant terms as pinned components
    double lambda_ = 1.0;  // accumulated transversal rescaling
    ExtensionOptions opt_;
};

// sd < d: the unique extension (telescoping cutoff series); NeedsSubtraction otherwise.
ExtensionResult extend_unique(const DistributionKernel& t0, const ExtensionOptions& opt = {});
// sd >= d: <t, phi> = <t0, W phi> + sum_alpha c_alpha d^alpha phi(0).
ExtensionResult extend_with_w(const DistributionKernel& t0, const WOperator& W,
                              const std::vector<std::pair<MultiIndex, double>>& constants,
                              const ExtensionOptions& opt = {});
// Fiberwise extension off the total diagonal; W is built in the fiber
// variables (codimension replaces d). Constants multiply
// \int d_eta^alpha psi(x, 0) dx in chart coordinates.
ExtensionResult extend_at_surface(const DistributionKernel& t0, const SurfaceFibration& fib,
                                  const ExtensionOptions& opt = {}, const CutoffFamily& weight = {},
                                  const std::vector<std::pair<MultiIndex, double>>& constants = {});

// Transversal scaling degree of an extension, from pairings of its
// fiber-rescaled versions with chart probes.
DyadicScalingReport transversal_scaling_degree(const ExtensionResult& t, const std::vector<TestFunction>& probes,
                                               const ScalingOptions& opt = {});

// Scaling degree of t0 as used by the extension builders: the declared value
// when given, else the dyadic estimate snapped to an integer within 1e-6.
double extension_scaling_degree(const DistributionKernel& t0, const ExtensionOptions& opt);

}  // namespace egren
