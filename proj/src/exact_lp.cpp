#include "egren/exact_lp.hpp"

#include "egren/errors.hpp"

namespace egren {

namespace {

struct Tableau {
    RationalMatrix T;  // m x N
    RationalVector rhs;
    std::vector<std::size_t> basis;
    long pivots = 0;

    void pivot(std::size_t r, std::size_t col) {
        const mpq_class p = T[r][col];
        for (auto& v : T[r]) v /= p;
        rhs[r] /= p;
        for (std::size_t i = 0; i < T.size(); ++i) {
            if (i == r || T[i][col] == 0) continue;
            const mpq_class f = T[i][col];
            for (std::size_t j = 0; j < T[i].size(); ++j)
                if (T[r][j] != 0) T[i][j] -= f * T[r][j];
            rhs[i] -= f * rhs[r];
        }
        basis[r] = col;
        ++pivots;
    }

    // maximize cost.x over columns j < allowed; false when unbounded
    bool optimize(const RationalVector& cost, std::size_t allowed) {
        const std::size_t m = T.size();
        for (;;) {
            std::size_t enter = allowed;
            for (std::size_t j = 0; j < allowed && enter == allowed; ++j) {
                mpq_class r = -cost[j];
                for (std::size_t i = 0; i < m; ++i)
                    if (T[i][j] != 0) r += cost[basis[i]] * T[i][j];
                if (r < 0) enter = j;
            }
            if (enter == allowed) return true;
            std::size_t leave = m;
            mpq_class best;
            for (std::size_t i = 0; i < m; ++i) {
                if (T[i][enter] <= 0) continue;
                const mpq_class ratio = rhs[i] / T[i][enter];
                if (leave == m || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == m) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

LPSolution solve_exact_lp(const ExactLP& lp) {
    const std::size_t m = lp.A.size();
    const std::size_t n = m ? lp.A.front().size() : lp.c.size();
    require(lp.b.size() == m, "LP right-hand side has wrong length");
    for (const auto& row : lp.A) require(row.size() == n, "LP matrix rows differ in length");
    require(lp.c.empty() || lp.c.size() == n, "LP objective has wrong length");

    LPSolution sol;
    Tableau t;
    t.T.assign(m, RationalVector(n + m, 0));
    t.rhs.resize(m);
    t.basis.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const bool flip = lp.b[i] < 0;
        for (std::size_t j = 0; j < n; ++j) t.T[i][j] = flip ? mpq_class(-lp.A[i][j]) : lp.A[i][j];
        t.rhs[i] = flip ? mpq_class(-lp.b[i]) : lp.b[i];
        t.T[i][n + i] = 1;
        t.basis[i] = n + i;
    }
    // phase 1
    RationalVector cost(n + m, 0);
    for (std::size_t i = 0; i < m; ++i) cost[n + i] = -1;
    t.optimize(cost, n + m);
    mpq_class infeas = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (t.basis[i] >= n) infeas += t.rhs[i];
    if (infeas != 0) {
        sol.pivots = t.pivots;
        return sol;
    }
    // artificials left in the basis sit at zero: pivot them out or drop the row
    for (std::size_t i = 0; i < t.T.size();) {
        if (t.basis[i] < n) {
            ++i;
            continue;
        }
        std::size_t col = n;
        for (std::size_t j = 0; j < n && col == n; ++j)
            if (t.T[i][j] != 0) col = j;
        if (col < n) {
            t.pivot(i, col);
            ++i;
        } else {
            t.T.erase(t.T.begin() + static_cast<std::ptrdiff_t>(i));
            t.rhs.erase(t.rhs.begin() + static_cast<std::ptrdiff_t>(i));
            t.basis.erase(t.basis.begin() + static_cast<std::ptrdiff_t>(i));
        }
    }
    sol.status = LPStatus::Optimal;
    if (!lp.c.empty()) {
        RationalVector c2(n + m, 0);
        for (std::size_t j = 0; j < n; ++j) c2[j] = lp.c[j];
        if (!t.optimize(c2, n)) sol.status = LPStatus::Unbounded;
    }
    sol.x.assign(n, 0);
    for (std::size_t i = 0; i < t.T.size(); ++i) sol.x[t.basis[i]] = t.rhs[i];
    sol.objective = 0;
    for (std::size_t j = 0; j < n && !lp.c.empty(); ++j) sol.objective += lp.c[j] * sol.x[j];
    sol.pivots = t.pivots;
    return sol;
}

int exact_rank(RationalMatrix m) {
    int rank = 0;
    const std::size_t rows = m.size(), cols = rows ? m.front().size() : 0;
    for (std::size_t c = 0; c < cols && static_cast<std::size_t>(rank) < rows; ++c) {
        std::size_t p = static_cast<std::size_t>(rank);
        while (p < rows && m[p][c] == 0) ++p;
        if (p == rows) continue;
        std::swap(m[p], m[static_cast<std::size_t>(rank)]);
        const auto& pr = m[static_cast<std::size_t>(rank)];
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == static_cast<std::size_t>(rank) || m[i][c] == 0) continue;
            const mpq_class f = m[i][c] / pr[c];
            for (std::size_t j = c; j < cols; ++j) m[i][j] -= f * pr[j];
        }
        ++rank;
    }
    return rank;
}

}  // namespace egren
