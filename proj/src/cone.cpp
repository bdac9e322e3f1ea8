#include "egren/cone.hpp"

#include <algorithm>
#include <functional>

#include <fmt/core.h>

#include "egren/errors.hpp"

namespace egren {

bool is_zero(const Covector& k) {
    return std::all_of(k.begin(), k.end(), [](const mpq_class& v) { return v == 0; });
}

namespace {

mpq_class spatial_norm2(const Covector& k) {
    mpq_class s = 0;
    for (std::size_t i = 1; i < k.size(); ++i) s += k[i] * k[i];
    return s;
}

bool proportional(const Covector& a, const std::vector<mpq_class>& b) {
    // a = c b for some c (b != 0)
    std::size_t p = 0;
    while (p < b.size() && b[p] == 0) ++p;
    if (p == b.size()) return false;
    const mpq_class c = a[p] / b[p];
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != c * b[i]) return false;
    return true;
}

Covector diff(const MinkowskiPoint& x, const MinkowskiPoint& y) {
    Covector v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = y[i] - x[i];
    return v;
}

Covector negated(const Covector& k) {
    Covector v(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) v[i] = -k[i];
    return v;
}

void same_dim(const MinkowskiPoint& x, const Covector& k, const MinkowskiPoint& xp, const Covector& kp) {
    require(!x.empty() && x.size() == k.size() && x.size() == xp.size() && x.size() == kp.size(),
            "points and covectors must share one dimension");
}

}  // namespace

bool is_null(const Covector& k) { return !k.empty() && k[0] * k[0] == spatial_norm2(k); }

bool in_closed_future_cone(const Covector& k) { return k[0] >= 0 && k[0] * k[0] >= spatial_norm2(k); }

bool in_closed_past_cone(const Covector& k) { return k[0] <= 0 && k[0] * k[0] >= spatial_norm2(k); }

bool wf_commutator_member(const MinkowskiPoint& x, const Covector& k, const MinkowskiPoint& xp, const Covector& kp) {
    same_dim(x, k, xp, kp);
    require(!(is_zero(k) && is_zero(kp)), "covectors must not both vanish");
    if (is_zero(k) || k != kp || !is_null(k)) return false;
    if (x == xp) return true;
    const Covector v = diff(x, xp);
    return is_null(v) && proportional(k, v);
}

bool wf2_hadamard_member(const MinkowskiPoint& x, const Covector& k, const MinkowskiPoint& xp, const Covector& kp) {
    return wf_commutator_member(x, k, xp, kp) && in_closed_future_cone(k);
}

bool wf_feynman_member(const MinkowskiPoint& x, const Covector& k, const MinkowskiPoint& xp, const Covector& kp) {
    same_dim(x, k, xp, kp);
    require(!(is_zero(k) && is_zero(kp)), "covectors must not both vanish");
    if (x == xp) return k == kp;  // D piece, k != 0 since not both vanish
    if (!wf_commutator_member(x, k, xp, kp)) return false;
    // x in J^+(x') needs k future, x in J^-(x') needs k past
    if (in_causal_past(xp, x)) return in_closed_future_cone(k);
    return in_closed_past_cone(k);
}

int ConeGenerators::dimension() const {
    if (!generators.empty()) return static_cast<int>(generators.front().size());
    return static_cast<int>(base.size());
}

void ConeGenerators::validate() const {
    const int d = dimension();
    for (const auto& g : generators) {
        require(static_cast<int>(g.size()) == d, "cone generators must share one dimension");
        require(!is_zero(g), "cone generators must be nonzero");
    }
    require(base.empty() || static_cast<int>(base.size()) == d || generators.empty(),
            "base point and generators differ in dimension");
}

ConeGenerators future_null_cone_d2() { return ConeGenerators{{0, 0}, {{1, 1}, {1, -1}}}; }

ConeGenerators all_directions(int d) {
    ConeGenerators c;
    c.base.assign(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i)
        for (int s : {1, -1}) {
            Covector g(static_cast<std::size_t>(d), 0);
            g[static_cast<std::size_t>(i)] = s;
            c.generators.push_back(g);
        }
    return c;
}

namespace {

// Is there a nonzero K = sum_i lambda_i g_i (lambda >= 0) with extra linear
// constraints rows.K + (cols of `extra`) = 0? Decided by 2D normalized LPs
// K_c = +-1.
bool nonzero_cone_point(const std::vector<Covector>& gens, const RationalMatrix& extra_cols_rows,
                        const RationalMatrix& annihilate) {
    // variables: lambda (gens), then one block per extra column set
    const std::size_t D = gens.front().size();
    const std::size_t ng = gens.size();
    const std::size_t ne = extra_cols_rows.size();
    for (std::size_t c = 0; c < D; ++c)
        for (int sgn : {1, -1}) {
            ExactLP lp;
            // K + sum_j mu_j h_j = 0 when `extra` is given (hormander form)
            if (ne > 0) {
                for (std::size_t r = 0; r < D; ++r) {
                    RationalVector row(ng + ne, 0);
                    for (std::size_t i = 0; i < ng; ++i) row[i] = gens[i][r];
                    for (std::size_t j = 0; j < ne; ++j) row[ng + j] = extra_cols_rows[j][r];
                    lp.A.push_back(row);
                    lp.b.push_back(0);
                }
            }
            for (const auto& v : annihilate) {
                RationalVector row(ng + ne, 0);
                for (std::size_t i = 0; i < ng; ++i) {
                    mpq_class s = 0;
                    for (std::size_t r = 0; r < D; ++r) s += gens[i][r] * v[r];
                    row[i] = s;
                }
                lp.A.push_back(row);
                lp.b.push_back(0);
            }
            RationalVector norm(ng + ne, 0);
            for (std::size_t i = 0; i < ng; ++i) norm[i] = gens[i][c];
            lp.A.push_back(norm);
            lp.b.push_back(sgn);
            if (solve_exact_lp(lp).status != LPStatus::Infeasible) return true;
        }
    return false;
}

}  // namespace

bool hormander_product_check(const ConeGenerators& A, const ConeGenerators& B) {
    A.validate();
    B.validate();
    if (A.generators.empty() || B.generators.empty()) return true;
    require(A.dimension() == B.dimension(), "cones live in different dimensions");
    if (!A.base.empty() && !B.base.empty()) require(A.base == B.base, "cones have different base points");
    RationalMatrix hb;
    for (const auto& g : B.generators) hb.push_back(g);
    return !nonzero_cone_point(A.generators, hb, {});
}

bool restriction_allowed(const std::vector<ConeGenerators>& cones, const RationalMatrix& basis) {
    for (const auto& row : basis) require(row.size() == basis.front().size(), "subspace basis rows differ in length");
    const std::size_t D = basis.empty() ? 0 : basis.front().size();
    const int rank = exact_rank(basis);
    for (const auto& cone : cones) {
        cone.validate();
        if (cone.generators.empty()) continue;
        require(basis.empty() || static_cast<std::size_t>(cone.dimension()) == D,
                "cone and subspace live in different dimensions");
        if (!cone.base.empty() && !basis.empty()) {
            RationalMatrix with = basis;
            with.push_back(cone.base);
            if (exact_rank(with) != rank) continue;  // base point off the subspace
        }
        if (nonzero_cone_point(cone.generators, {}, basis)) return false;
    }
    return true;
}

void CovectorConfig::validate() const {
    point_config().validate();
    require(covectors.size() == points.size(),
            fmt::format("{} covectors for {} points", covectors.size(), points.size()));
    bool any = false;
    for (std::size_t i = 0; i < covectors.size(); ++i) {
        require(static_cast<int>(covectors[i].size()) == d,
                fmt::format("covector {} has {} components, expected {}", i + 1, covectors[i].size(), d));
        any = any || !is_zero(covectors[i]);
    }
    require(any, "covectors must not all vanish");
}

std::string_view to_string(EdgeOrientation o) { return o == EdgeOrientation::FutureOnly ? "FutureOnly" : "Free"; }

std::string_view to_string(FeasibilityVerdict v) {
    switch (v) {
        case FeasibilityVerdict::Feasible: return "Feasible";
        case FeasibilityVerdict::Infeasible: return "Infeasible";
        case FeasibilityVerdict::IncompleteSearch: return "IncompleteSearch";
    }
    return "?";
}

ImmersionProblem build_immersion_problem(const PointConfig& cfg, const ImmersionOptions& opt) {
    cfg.validate();
    require(opt.multiplicity_bound >= 1, "multiplicity bound must be positive");
    ImmersionProblem p;
    p.config = cfg;
    std::vector<Covector> coincident_dirs;
    if (cfg.d == 2) {
        coincident_dirs = {{1, 1}, {1, -1}};
    } else if (opt.direction_grid) {
        for (const auto& g : *opt.direction_grid) {
            require(static_cast<int>(g.size()) == cfg.d, "direction grid entry has wrong dimension");
            require(!is_zero(g) && is_null(g), "direction grid entries must be nonzero null covectors");
            const Covector f = g[0] > 0 ? g : negated(g);
            if (std::find(coincident_dirs.begin(), coincident_dirs.end(), f) == coincident_dirs.end())
                coincident_dirs.push_back(f);
        }
    }
    const int n = cfg.size();
    for (int s = 1; s <= n; ++s)
        for (int r = s + 1; r <= n; ++r) {
            const auto& xs = cfg[s - 1];
            const auto& xr = cfg[r - 1];
            AdmissiblePair e;
            e.s = s;
            e.r = r;
            e.orientation = in_causal_past(xs, xr) ? EdgeOrientation::Free : EdgeOrientation::FutureOnly;
            if (xs == xr) {
                e.coincident = true;
                e.directions = coincident_dirs;
                if (coincident_dirs.empty()) p.complete = false;
            } else {
                const Covector v = diff(xs, xr);
                if (!is_null(v)) continue;
                e.directions.push_back(v[0] > 0 ? v : negated(v));
            }
            p.pairs.push_back(std::move(e));
        }
    return p;
}

std::vector<std::vector<int>> ImmersionWitness::multiplicity(int n) const {
    std::vector<std::vector<int>> a(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 0));
    for (const auto& e : edges) {
        ++a[static_cast<std::size_t>(e.s - 1)][static_cast<std::size_t>(e.r - 1)];
        ++a[static_cast<std::size_t>(e.r - 1)][static_cast<std::size_t>(e.s - 1)];
    }
    return a;
}

bool witness_reproduces(const CovectorConfig& cc, const ImmersionWitness& w) {
    const int n = cc.size();
    std::vector<Covector> sum(static_cast<std::size_t>(n), Covector(static_cast<std::size_t>(cc.d), 0));
    for (const auto& e : w.edges) {
        if (e.s < 1 || e.r > n || e.s >= e.r || static_cast<int>(e.k.size()) != cc.d) return false;
        for (int c = 0; c < cc.d; ++c) {
            sum[static_cast<std::size_t>(e.s - 1)][static_cast<std::size_t>(c)] += e.k[static_cast<std::size_t>(c)];
            sum[static_cast<std::size_t>(e.r - 1)][static_cast<std::size_t>(c)] -= e.k[static_cast<std::size_t>(c)];
        }
    }
    for (int i = 0; i < n; ++i)
        if (sum[static_cast<std::size_t>(i)] != cc.covectors[static_cast<std::size_t>(i)]) return false;
    return true;
}

namespace {

constexpr long kGraphCap = 200000;

struct Column {
    std::size_t pair;
    Covector k;  // edge covector per unit of the variable
};

// rows c + d*i hold component c of vertex i
RationalVector column_of(const AdmissiblePair& p, const Covector& k, int d, int n, const mpq_class& weight = 1) {
    RationalVector col(static_cast<std::size_t>(d * n), 0);
    for (int c = 0; c < d; ++c) {
        col[static_cast<std::size_t>(c + d * (p.s - 1))] += weight * k[static_cast<std::size_t>(c)];
        col[static_cast<std::size_t>(c + d * (p.r - 1))] -= weight * k[static_cast<std::size_t>(c)];
    }
    return col;
}

RationalVector rhs_of(const CovectorConfig& cc) {
    RationalVector b;
    for (const auto& k : cc.covectors)
        for (const auto& v : k) b.push_back(v);
    return b;
}

ExactLP lp_from_columns(const std::vector<RationalVector>& cols, const RationalVector& b) {
    ExactLP lp;
    lp.b = b;
    lp.A.assign(b.size(), RationalVector(cols.size(), 0));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < b.size(); ++i) lp.A[i][j] = cols[j][i];
    return lp;
}

// all k-subsets of {0..m-1}
void subsets_of_size(std::size_t m, std::size_t k, std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < m; ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
}

}  // namespace

ConeVerdict gamma_to_member(const CovectorConfig& cc, const ImmersionOptions& opt) {
    cc.validate();
    const ImmersionProblem prob = build_immersion_problem(cc.point_config(), opt);
    const int n = cc.size(), d = cc.d;
    ConeVerdict out;
    out.multiplicity_bound = opt.multiplicity_bound;
    const RationalVector b = rhs_of(cc);

    // Parallel edges along one direction merge, and a basic solution uses at
    // most one sign per direction, so a graph is a choice of at most `bound`
    // directions per pair and one LP decides all its subgraphs.
    std::vector<std::vector<std::vector<std::size_t>>> choices(prob.pairs.size());
    long combos = 1;
    for (std::size_t p = 0; p < prob.pairs.size(); ++p) {
        const std::size_t m = prob.pairs[p].directions.size();
        const std::size_t bound = static_cast<std::size_t>(opt.multiplicity_bound);
        if (m <= bound)
            choices[p].push_back([&] {
                std::vector<std::size_t> all(m);
                for (std::size_t i = 0; i < m; ++i) all[i] = i;
                return all;
            }());
        else
            subsets_of_size(m, bound, choices[p]);
        combos = std::min(kGraphCap + 1, combos * static_cast<long>(choices[p].size()));
    }
    bool truncated = combos > kGraphCap;
    std::vector<std::size_t> pick(prob.pairs.size(), 0);
    for (long g = 0; g < std::min(combos, kGraphCap); ++g) {
        std::vector<RationalVector> cols;
        std::vector<Column> meta;
        for (std::size_t p = 0; p < prob.pairs.size(); ++p) {
            const auto& pr = prob.pairs[p];
            for (std::size_t di : choices[p][pick[p]]) {
                const Covector& dir = pr.directions[di];
                cols.push_back(column_of(pr, dir, d, n));
                meta.push_back({p, dir});
                if (pr.orientation == EdgeOrientation::Free) {
                    cols.push_back(column_of(pr, negated(dir), d, n));
                    meta.push_back({p, negated(dir)});
                }
            }
        }
        ++out.graphs_tried;
        ++out.lp_solves;
        const LPSolution sol = solve_exact_lp(lp_from_columns(cols, b));
        if (sol.status != LPStatus::Infeasible) {
            ImmersionWitness w;
            for (std::size_t j = 0; j < cols.size(); ++j) {
                if (sol.x[j] == 0) continue;
                Covector k = meta[j].k;
                for (auto& v : k) v *= sol.x[j];
                w.edges.push_back({prob.pairs[meta[j].pair].s, prob.pairs[meta[j].pair].r, k});
            }
            out.verdict = FeasibilityVerdict::Feasible;
            out.witness = std::move(w);
            return out;
        }
        for (std::size_t p = 0; p < pick.size(); ++p) {
            if (++pick[p] < choices[p].size()) break;
            pick[p] = 0;
        }
    }
    if (!prob.complete || truncated) {
        out.verdict = FeasibilityVerdict::IncompleteSearch;
        out.note = !prob.complete ? "coincident points need null directions from a direction grid for d >= 3"
                                  : "graph enumeration cap reached";
    } else {
        out.verdict = FeasibilityVerdict::Infeasible;
    }
    return out;
}

ConeVerdict digamma_member(const CovectorConfig& cc, const std::vector<int>& degrees, const ImmersionOptions& opt) {
    cc.validate();
    const int n = cc.size(), d = cc.d;
    require(static_cast<int>(degrees.size()) == n, fmt::format("{} degrees for {} points", degrees.size(), n));
    long total = 0;
    for (int m : degrees) {
        require(m >= 0, "degrees must be nonnegative");
        total += m;
    }
    ConeVerdict out;
    out.multiplicity_bound = opt.multiplicity_bound;
    if (total % 2 != 0) {
        out.note = "odd degree sum: no saturated graph";
        return out;
    }
    const ImmersionProblem prob = build_immersion_problem(cc.point_config(), opt);
    const RationalVector b = rhs_of(cc);
    bool pruned = false, capped = false;

    // enumerate multiplicities a_p with row sums equal to the degrees
    std::vector<int> rem(degrees);
    std::vector<int> a(prob.pairs.size(), 0);
    std::optional<ImmersionWitness> found;

    // per graph: split the edges of each pair over its future directions,
    // then maximize t subject to beta_e >= t, t <= 1
    auto try_graph = [&]() {
        std::vector<std::vector<std::vector<int>>> splits(prob.pairs.size());
        for (std::size_t p = 0; p < prob.pairs.size(); ++p) {
            const int m = static_cast<int>(prob.pairs[p].directions.size());
            if (a[p] == 0) {
                splits[p].push_back(std::vector<int>(static_cast<std::size_t>(std::max(m, 0)), 0));
                continue;
            }
            if (m == 0) {
                pruned = pruned || !prob.complete;
                return;
            }
            std::vector<int> cur(static_cast<std::size_t>(m), 0);
            std::function<void(int, int)> rec = [&](int i, int left) {
                if (i == m - 1) {
                    cur[static_cast<std::size_t>(i)] = left;
                    splits[p].push_back(cur);
                    return;
                }
                for (int q = 0; q <= left; ++q) {
                    cur[static_cast<std::size_t>(i)] = q;
                    rec(i + 1, left - q);
                }
            };
            rec(0, a[p]);
        }
        std::vector<std::size_t> pick(prob.pairs.size(), 0);
        for (;;) {
            if (found || out.graphs_tried >= kGraphCap) {
                capped = capped || (!found && out.graphs_tried >= kGraphCap);
                return;
            }
            ++out.graphs_tried;
            // variables: slack s_(p,dir) for used directions, then t, then u (t + u = 1)
            std::vector<RationalVector> cols;
            std::vector<std::pair<std::size_t, std::size_t>> meta;
            RationalVector tcol(static_cast<std::size_t>(d * n), 0);
            for (std::size_t p = 0; p < prob.pairs.size(); ++p) {
                const auto& split = splits[p][pick[p]];
                for (std::size_t di = 0; di < split.size(); ++di) {
                    if (split[di] == 0) continue;
                    const RationalVector col = column_of(prob.pairs[p], prob.pairs[p].directions[di], d, n, split[di]);
                    for (std::size_t i = 0; i < col.size(); ++i) tcol[i] += col[i];
                    cols.push_back(col);
                    meta.push_back({p, di});
                }
            }
            ExactLP lp = lp_from_columns(cols, b);
            const std::size_t ns = cols.size();
            for (auto& row : lp.A) {
                row.push_back(0);
                row.push_back(0);
            }
            for (std::size_t i = 0; i < lp.A.size(); ++i) lp.A[i][ns] = tcol[i];
            RationalVector bound_row(ns + 2, 0);
            bound_row[ns] = 1;
            bound_row[ns + 1] = 1;
            lp.A.push_back(bound_row);
            lp.b.push_back(1);
            lp.c.assign(ns + 2, 0);
            lp.c[ns] = 1;
            ++out.lp_solves;
            const LPSolution sol = solve_exact_lp(lp);
            if (sol.status == LPStatus::Optimal && sol.objective > 0) {
                ImmersionWitness w;
                const mpq_class t = sol.x[ns];
                for (std::size_t j = 0; j < ns; ++j) {
                    const auto& [p, di] = meta[j];
                    const mpq_class beta = t + sol.x[j];
                    Covector k = prob.pairs[p].directions[di];
                    for (auto& v : k) v *= beta;
                    const int q = splits[p][pick[p]][di];
                    for (int e = 0; e < q; ++e) w.edges.push_back({prob.pairs[p].s, prob.pairs[p].r, k});
                }
                found = std::move(w);
                return;
            }
            std::size_t p = 0;
            for (; p < pick.size(); ++p) {
                if (++pick[p] < splits[p].size()) break;
                pick[p] = 0;
            }
            if (p == pick.size()) return;
        }
    };

    std::function<void(std::size_t)> rec = [&](std::size_t p) {
        if (found || capped) return;
        if (p == prob.pairs.size()) {
            if (std::all_of(rem.begin(), rem.end(), [](int v) { return v == 0; })) try_graph();
            return;
        }
        const int s = prob.pairs[p].s - 1, r = prob.pairs[p].r - 1;
        const int most = std::min(rem[static_cast<std::size_t>(s)], rem[static_cast<std::size_t>(r)]);
        if (most > opt.multiplicity_bound) pruned = true;
        for (int q = std::min(most, opt.multiplicity_bound); q >= 0; --q) {
            a[p] = q;
            rem[static_cast<std::size_t>(s)] -= q;
            rem[static_cast<std::size_t>(r)] -= q;
            rec(p + 1);
            rem[static_cast<std::size_t>(s)] += q;
            rem[static_cast<std::size_t>(r)] += q;
            a[p] = 0;
        }
    };
    rec(0);

    if (found) {
        out.verdict = FeasibilityVerdict::Feasible;
        out.witness = std::move(found);
    } else if (pruned || capped || !prob.complete) {
        out.verdict = FeasibilityVerdict::IncompleteSearch;
        out.note = capped   ? "graph enumeration cap reached"
                   : pruned ? "saturated graphs beyond the multiplicity bound or without null directions were skipped"
                            : "coincident points need null directions from a direction grid for d >= 3";
    } else {
        out.verdict = FeasibilityVerdict::Infeasible;
    }
    return out;
}

}  // namespace egren
