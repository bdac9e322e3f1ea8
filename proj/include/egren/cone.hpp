#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "egren/causal.hpp"
#include "egren/exact_lp.hpp"

namespace egren {

// Covector components in the same global coordinates as points. A covector
// is coparallel to a vector when its components are proportional to the
// vector's components, and k is in the closed future cone when k_0 >= |k_vec|.
using Covector = std::vector<mpq_class>;

bool is_zero(const Covector& k);
bool is_null(const Covector& k);
bool in_closed_future_cone(const Covector& k);
bool in_closed_past_cone(const Covector& k);

// (x, k) ~ (x', k'): null geodesic from x to x' with k coparallel to its
// tangent and k' = k (parallel transport is the identity here). At x = x'
// any nonzero null k with k' = k. The wave front element is (x, k; x', -k').
bool wf_commutator_member(const MinkowskiPoint& x, const Covector& k, const MinkowskiPoint& xp, const Covector& kp);
// ... and k in the closed future cone
bool wf2_hadamard_member(const MinkowskiPoint& x, const Covector& k, const MinkowskiPoint& xp, const Covector& kp);
// off-diagonal piece with k future/past when x is in J^+/J^-(x'), or x = x'
// with k = k' != 0
bool wf_feynman_member(const MinkowskiPoint& x, const Covector& k, const MinkowskiPoint& xp, const Covector& kp);

struct ConeGenerators {
    std::vector<mpq_class> base;  // base point (may be empty when irrelevant)
    std::vector<Covector> generators;

    int dimension() const;
    void validate() const;
};

// Standard generator sets at a point of R^{1,d-1}.
ConeGenerators future_null_cone_d2();          // rays (1,1), (1,-1)
ConeGenerators all_directions(int d);          // +-e_i: a full neighbourhood of directions

// No a in cone(A)\{0}, b in cone(B)\{0} with a + b = 0.
bool hormander_product_check(const ConeGenerators& A, const ConeGenerators& B);

// Linear subspace of R^D spanned by the rows of `basis`. Cones whose base
// point is not on the subspace are ignored; for the others, no nonzero
// element of the cone may annihilate the subspace.
bool restriction_allowed(const std::vector<ConeGenerators>& cones, const RationalMatrix& basis);

struct CovectorConfig {
    int d = 2;
    std::vector<MinkowskiPoint> points;
    std::vector<Covector> covectors;

    int size() const { return static_cast<int>(points.size()); }
    PointConfig point_config() const { return PointConfig{d, points}; }
    void validate() const;
};

enum class EdgeOrientation { FutureOnly, Free };
std::string_view to_string(EdgeOrientation o);

// An admissible vertex pair s < r (1-based) with its null direction domain:
// the future null direction along the geodesic for distinct points, the
// future null directions of the grid (both rays in d = 2) for coincident ones.
struct AdmissiblePair {
    int s = 0, r = 0;
    bool coincident = false;
    EdgeOrientation orientation = EdgeOrientation::Free;
    std::vector<Covector> directions;  // future pointing
};

struct ImmersionOptions {
    int multiplicity_bound = 4;                         // edges per vertex pair
    std::optional<std::vector<Covector>> direction_grid;  // null covectors for coincident pairs, d >= 3
};

struct ImmersionProblem {
    PointConfig config;
    std::vector<AdmissiblePair> pairs;
    bool complete = true;  // false when coincident pairs lack a direction domain (d >= 3, no grid)
};

ImmersionProblem build_immersion_problem(const PointConfig& cfg, const ImmersionOptions& opt);

struct WitnessEdge {
    int s = 0, r = 0;
    Covector k;  // k_e; contributes +k_e at s and -k_e at r
};

struct ImmersionWitness {
    std::vector<WitnessEdge> edges;

    std::vector<std::vector<int>> multiplicity(int n) const;
};

enum class FeasibilityVerdict { Feasible, Infeasible, IncompleteSearch };
std::string_view to_string(FeasibilityVerdict v);

struct ConeVerdict {
    FeasibilityVerdict verdict = FeasibilityVerdict::Infeasible;
    std::optional<ImmersionWitness> witness;
    int multiplicity_bound = 4;
    long graphs_tried = 0;
    long lp_solves = 0;
    std::string note;
};

// Sum rule k_i = sum_{s(e)=i} k_e - sum_{r(e)=i} k_e, checked exactly.
bool witness_reproduces(const CovectorConfig& cc, const ImmersionWitness& w);

ConeVerdict gamma_to_member(const CovectorConfig& cc, const ImmersionOptions& opt = {});
// Saturated graphs (vertex i has degree m_i), every k_e future directed and nonzero.
ConeVerdict digamma_member(const CovectorConfig& cc, const std::vector<int>& degrees,
                           const ImmersionOptions& opt = {});

}  // namespace egren
