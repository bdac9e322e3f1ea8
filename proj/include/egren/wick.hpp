#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace egren {

// Multigraph on n labelled vertices, no self loops.
struct ContractionGraph {
    int n = 0;
    std::vector<std::vector<int>> a;  // symmetric, zero diagonal

    static ContractionGraph empty(int n);
    // from the upper-triangular vector a12, a13, ..., a1n, a23, ...
    static ContractionGraph from_upper(int n, const std::vector<int>& upper);

    int degree(int i) const;  // 0-based vertex
    int edges() const;        // I
    int components() const;
    int loops() const { return edges() - n + components(); }  // L, summed over components
    bool connected() const { return components() == 1; }
    std::vector<int> upper() const;
    void validate() const;
    std::string str() const;  // "a12=2 a13=1"
};

struct WickTerm {
    ContractionGraph graph;
    mpz_class coefficient;
    std::vector<int> residual;  // j_i = m_i - |E_i|
};

// Lexicographic order on the upper-triangular vector, smallest first.
std::vector<ContractionGraph> enumerate_saturated_graphs(const std::vector<int>& m);
std::vector<WickTerm> wick_expand(const std::vector<int>& m);

// prod_i m_i!/j_i! / prod_{i<j} a_ij!
mpz_class wick_coefficient(const ContractionGraph& g, const std::vector<int>& m);

// Brute force over all pairings of labelled legs (legs of one vertex never pair):
// count per graph, keyed by the upper-triangular vector. Meant for sum m <= 12.
std::vector<std::pair<std::vector<int>, long>> pairing_census(const std::vector<int>& m, bool saturated_only);

// omega = sum_{i<j} a_ij (d - 2) + sum of lower-order inputs (default none)
double graph_scaling_degree(const ContractionGraph& g, int d, const std::vector<double>& lower = {});
// omega - d (n - c) with c components; equals dL - 2I without lower-order inputs
double divergence_degree(const ContractionGraph& g, int d, const std::vector<double>& lower = {});

// C(floor(rho) + codim, codim), 0 for rho < 0
mpz_class ambiguity_count(double rho, long codim);

enum class Renormalizability { Superrenormalizable, Renormalizable, NonRenormalizable };
std::string_view to_string(Renormalizability r);

struct OrderRow {
    int n = 0;
    double omega = 0;  // n k (d-2)/2
    double rho = 0;    // omega - d (n-1)
    mpz_class ambiguity;
};

struct ClassificationReport {
    int d = 0;
    std::vector<int> exponents;  // interaction monomial powers
    int k_max = 0;
    int n_max = 0;
    std::vector<OrderRow> table;  // n = 2 .. n_max
    Renormalizability verdict = Renormalizability::Superrenormalizable;
    std::optional<double> threshold;  // 2d/(d-2), none for d = 2
    double slope = 0;                 // rho(n+1) - rho(n)
    int last_divergent_order = 0;     // largest n >= 2 with rho(n) >= 0 (superrenormalizable case), 0 if none
    std::string note;
};

ClassificationReport classify_interaction(int d, const std::vector<int>& exponents, int n_max);

}  // namespace egren
