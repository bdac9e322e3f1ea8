#include "egren/wick.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include <fmt/core.h>

#include "egren/errors.hpp"

namespace egren {

namespace {

constexpr int kMaxDegree = 100000;

void check_degrees(const std::vector<int>& m, std::size_t min_n) {
    require(m.size() >= min_n, fmt::format("need at least {} vertices", min_n));
    for (int v : m) {
        require(v >= 0, "vertex degrees must be nonnegative");
        require(v <= kMaxDegree, fmt::format("vertex degree {} exceeds {}", v, kMaxDegree));
    }
}

mpz_class factorial(int k) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(k));
    return f;
}

// visit every symmetric matrix with row sums <= m (== m when saturated), lexicographic
void scan_graphs(const std::vector<int>& m, bool saturated, const std::function<void(const ContractionGraph&)>& visit) {
    const int n = static_cast<int>(m.size());
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    ContractionGraph g = ContractionGraph::empty(n);
    std::vector<int> rem(m);
    std::function<void(std::size_t)> rec = [&](std::size_t p) {
        if (p == pairs.size()) {
            if (!saturated || std::all_of(rem.begin(), rem.end(), [](int v) { return v == 0; })) visit(g);
            return;
        }
        const auto [i, j] = pairs[p];
        // vertex i has no pairs left after its last partner j = n-1
        const int most = std::min(rem[static_cast<std::size_t>(i)], rem[static_cast<std::size_t>(j)]);
        for (int q = 0; q <= most; ++q) {
            if (saturated && j == n - 1 && q != rem[static_cast<std::size_t>(i)]) continue;
            g.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = q;
            g.a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = q;
            rem[static_cast<std::size_t>(i)] -= q;
            rem[static_cast<std::size_t>(j)] -= q;
            rec(p + 1);
            rem[static_cast<std::size_t>(i)] += q;
            rem[static_cast<std::size_t>(j)] += q;
        }
        g.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0;
        g.a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 0;
    };
    rec(0);
}

}  // namespace

ContractionGraph ContractionGraph::empty(int n) {
    require(n >= 0, "vertex count must be nonnegative");
    ContractionGraph g;
    g.n = n;
    g.a.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
    return g;
}

ContractionGraph ContractionGraph::from_upper(int n, const std::vector<int>& upper) {
    ContractionGraph g = empty(n);
    require(upper.size() == static_cast<std::size_t>(n * (n - 1) / 2),
            fmt::format("{} multiplicities for {} vertices", upper.size(), n));
    std::size_t p = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++p) {
            require(upper[p] >= 0, "edge multiplicities must be nonnegative");
            g.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = upper[p];
            g.a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = upper[p];
        }
    return g;
}

int ContractionGraph::degree(int i) const {
    const auto& row = a[static_cast<std::size_t>(i)];
    return std::accumulate(row.begin(), row.end(), 0);
}

int ContractionGraph::edges() const {
    int e = 0;
    for (int i = 0; i < n; ++i) e += degree(i);
    return e / 2;
}

int ContractionGraph::components() const {
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int c = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[static_cast<std::size_t>(s)] >= 0) continue;
        std::vector<int> stack{s};
        comp[static_cast<std::size_t>(s)] = c;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w)
                if (a[static_cast<std::size_t>(v)][static_cast<std::size_t>(w)] > 0 && comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = c;
                    stack.push_back(w);
                }
        }
        ++c;
    }
    return c;
}

std::vector<int> ContractionGraph::upper() const {
    std::vector<int> u;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) u.push_back(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    return u;
}

void ContractionGraph::validate() const {
    require(n >= 0 && a.size() == static_cast<std::size_t>(n), "multiplicity matrix has wrong size");
    for (int i = 0; i < n; ++i) {
        require(a[static_cast<std::size_t>(i)].size() == static_cast<std::size_t>(n), "multiplicity matrix is not square");
        require(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] == 0, "self loops are not allowed");
        for (int j = 0; j < n; ++j) {
            const int v = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            require(v >= 0, "edge multiplicities must be nonnegative");
            require(v == a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)], "multiplicity matrix is not symmetric");
        }
    }
}

std::string ContractionGraph::str() const {
    std::string s;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const int v = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (v == 0) continue;
            if (!s.empty()) s += ' ';
            s += fmt::format("a{},{}={}", i + 1, j + 1, v);
        }
    return s.empty() ? "(no edges)" : s;
}

std::vector<ContractionGraph> enumerate_saturated_graphs(const std::vector<int>& m) {
    check_degrees(m, 2);
    std::vector<ContractionGraph> out;
    if (std::accumulate(m.begin(), m.end(), 0L) % 2 != 0) return out;
    scan_graphs(m, true, [&](const ContractionGraph& g) { out.push_back(g); });
    return out;
}

mpz_class wick_coefficient(const ContractionGraph& g, const std::vector<int>& m) {
    g.validate();
    check_degrees(m, 0);
    require(m.size() == static_cast<std::size_t>(g.n), fmt::format("{} degrees for {} vertices", m.size(), g.n));
    mpz_class c = 1;
    for (int i = 0; i < g.n; ++i) {
        const int e = g.degree(i);
        require(e <= m[static_cast<std::size_t>(i)],
                fmt::format("vertex {} has {} edges but only {} legs", i + 1, e, m[static_cast<std::size_t>(i)]));
        c *= factorial(m[static_cast<std::size_t>(i)]);
        c /= factorial(m[static_cast<std::size_t>(i)] - e);
    }
    for (int i = 0; i < g.n; ++i)
        for (int j = i + 1; j < g.n; ++j) c /= factorial(g.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    return c;
}

std::vector<WickTerm> wick_expand(const std::vector<int>& m) {
    check_degrees(m, 1);
    std::vector<WickTerm> out;
    scan_graphs(m, false, [&](const ContractionGraph& g) {
        WickTerm t;
        t.graph = g;
        t.coefficient = wick_coefficient(g, m);
        for (int i = 0; i < g.n; ++i) t.residual.push_back(m[static_cast<std::size_t>(i)] - g.degree(i));
        out.push_back(std::move(t));
    });
    return out;
}

std::vector<std::pair<std::vector<int>, long>> pairing_census(const std::vector<int>& m, bool saturated_only) {
    check_degrees(m, 1);
    std::vector<int> owner;
    for (std::size_t i = 0; i < m.size(); ++i) owner.insert(owner.end(), static_cast<std::size_t>(m[i]), static_cast<int>(i));
    require(owner.size() <= 16, "pairing census is exponential; keep the total degree at most 16");
    const int n = static_cast<int>(m.size());
    std::map<std::vector<int>, long> count;
    std::vector<bool> used(owner.size(), false);
    ContractionGraph g = ContractionGraph::empty(n);
    std::function<void(std::size_t)> rec = [&](std::size_t p) {
        while (p < owner.size() && used[p]) ++p;
        if (p == owner.size()) {
            ++count[g.upper()];
            return;
        }
        used[p] = true;
        if (!saturated_only) rec(p + 1);
        for (std::size_t q = p + 1; q < owner.size(); ++q) {
            if (used[q] || owner[q] == owner[p]) continue;
            used[q] = true;
            const auto i = static_cast<std::size_t>(owner[p]), j = static_cast<std::size_t>(owner[q]);
            ++g.a[i][j];
            ++g.a[j][i];
            rec(p + 1);
            --g.a[i][j];
            --g.a[j][i];
            used[q] = false;
        }
        used[p] = false;
    };
    rec(0);
    return {count.begin(), count.end()};
}

double graph_scaling_degree(const ContractionGraph& g, int d, const std::vector<double>& lower) {
    g.validate();
    require(d >= 2, "dimension must be at least 2");
    double omega = static_cast<double>(g.edges()) * (d - 2);
    for (double v : lower) omega += v;
    return omega;
}

double divergence_degree(const ContractionGraph& g, int d, const std::vector<double>& lower) {
    return graph_scaling_degree(g, d, lower) - static_cast<double>(d) * (g.n - g.components());
}

mpz_class ambiguity_count(double rho, long codim) {
    require(codim >= 0 && std::isfinite(rho), "ambiguity count needs codim >= 0 and finite rho");
    if (rho < 0) return 0;
    mpz_class c;
    mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(std::floor(rho)) + static_cast<unsigned long>(codim),
                 static_cast<unsigned long>(codim));
    return c;
}

std::string_view to_string(Renormalizability r) {
    switch (r) {
        case Renormalizability::Superrenormalizable: return "Superrenormalizable";
        case Renormalizability::Renormalizable: return "Renormalizable";
        case Renormalizability::NonRenormalizable: return "NonRenormalizable";
    }
    return "?";
}

ClassificationReport classify_interaction(int d, const std::vector<int>& exponents, int n_max) {
    require(d >= 2, "dimension must be at least 2");
    require(!exponents.empty(), "need at least one interaction term");
    for (int k : exponents) require(k >= 1 && k <= kMaxDegree, "interaction powers must be positive");
    require(n_max >= 2, "order bound must be at least 2");
    ClassificationReport r;
    r.d = d;
    r.exponents = exponents;
    r.n_max = n_max;
    const int k = *std::max_element(exponents.begin(), exponents.end());
    r.k_max = k;
    if (d > 2) r.threshold = 2.0 * d / (d - 2);
    // 2 rho(n) = n s2 + 2d
    const long s2 = static_cast<long>(k) * (d - 2) - 2L * d;
    r.slope = static_cast<double>(s2) / 2;
    for (int n = 2; n <= n_max; ++n) {
        OrderRow row;
        row.n = n;
        row.omega = static_cast<double>(static_cast<long>(n) * k * (d - 2)) / 2;
        row.rho = row.omega - static_cast<double>(d) * (n - 1);
        row.ambiguity = ambiguity_count(row.rho, static_cast<long>(d) * (n - 1));
        r.table.push_back(std::move(row));
    }
    if (s2 > 0) {
        r.verdict = Renormalizability::NonRenormalizable;
    } else if (s2 == 0) {
        r.verdict = Renormalizability::Renormalizable;
    } else {
        r.verdict = Renormalizability::Superrenormalizable;
        const long last = (2L * d) / (-s2);
        r.last_divergent_order = last >= 2 ? static_cast<int>(last) : 0;
    }
    if (d == 2) r.note = "d = 2: propagators have scaling degree 0, every polynomial interaction is superrenormalizable";
    return r;
}

}  // namespace egren
