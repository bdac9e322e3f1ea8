#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace egren {

// Exact rational from "p/q", an integer, or a finite decimal ("-0.25", "1e-3").
mpq_class parse_rational(std::string_view s);
std::string format_rational(const mpq_class& q);

// Points of R^{1,d-1} as (t, x_1, ..., x_{d-1}), signature (+,-,...,-).
using MinkowskiPoint = std::vector<mpq_class>;

struct PointConfig {
    int d = 2;
    std::vector<MinkowskiPoint> points;

    int size() const { return static_cast<int>(points.size()); }
    const MinkowskiPoint& operator[](int i) const { return points[static_cast<std::size_t>(i)]; }  // 0-based
    void validate() const;
    bool on_total_diagonal() const;
};

enum class CausalRelation { StrictlyFuture, Lightlike, StrictlyPast, Spacelike, Equal };
std::string_view to_string(CausalRelation r);

// Relation of y to x. time_sign is the sign of t_y - t_x (it tells future from
// past for lightlike pairs).
struct CausalVerdict {
    CausalRelation relation = CausalRelation::Equal;
    int time_sign = 0;

    bool future() const { return time_sign > 0 && relation != CausalRelation::Spacelike; }
    bool past() const { return time_sign < 0 && relation != CausalRelation::Spacelike; }
};

mpq_class minkowski_interval(const MinkowskiPoint& x, const MinkowskiPoint& y);  // (y - x)^2
CausalVerdict classify_pair(const MinkowskiPoint& x, const MinkowskiPoint& y);
// x in J^-(y): closed causal past, x == y included.
bool in_causal_past(const MinkowskiPoint& x, const MinkowskiPoint& y);

// Subsets of {1..n}, 1-based, sorted.
using Subset = std::vector<int>;
void validate_subset(const Subset& s, int n, bool proper);
Subset complement(const Subset& s, int n);
std::string format_subset(const Subset& s);

// x_i not in J^-(x_j) for all i in I, j in I^c.
bool c_i_member(const PointConfig& cfg, const Subset& I);

struct CoverResult {
    bool on_diagonal = false;
    Subset witness;              // first member in (size, lexicographic) order
    std::vector<Subset> members;  // every proper subset with membership
};
CoverResult cover_witness(const PointConfig& cfg);

struct PartitionWeights {
    std::vector<std::pair<Subset, mpq_class>> weights;  // members only; others are 0

    mpq_class weight(const Subset& I) const;
    mpq_class total() const;
};

// Margin of the pair (i, j) for x_i not in J^-(x_j): (t_i - t_j)^2 when x_i is
// in the (closed) future of x_j, the spacelike gap |dx|^2 - dt^2 otherwise.
mpq_class causal_margin(const MinkowskiPoint& xi, const MinkowskiPoint& xj);
PartitionWeights partition_weights(const PointConfig& cfg);

struct TOFactor {
    Subset set;
    bool unsplittable = false;  // coincident points that no split separates

    bool operator==(const TOFactor& o) const { return set == o.set; }
};

struct TOWord {
    std::vector<TOFactor> factors;

    static TOWord single(const Subset& s) { return TOWord{{TOFactor{s, false}}}; }
    std::string str() const;
    bool operator==(const TOWord& o) const { return factors == o.factors; }
};

struct FactorizeOptions {
    // Random choice among admissible splits and factor order; the normal form
    // must not depend on it.
    std::optional<std::uint64_t> shuffle_seed;
    std::vector<std::string>* trace = nullptr;
};

// Splits factors by causal factorization until none splits, then returns the
// lexicographic normal form of the word modulo commutation of mutually
// spacelike factors.
TOWord causal_factorize(const TOWord& word, const PointConfig& cfg, const FactorizeOptions& opt = {});

// T(I1) T(I1^c) and T(I2) T(I2^c) reduce to the same normal form.
bool glue_consistency(const PointConfig& cfg, const Subset& I1, const Subset& I2,
                      std::vector<std::string>* trace = nullptr);

}  // namespace egren
