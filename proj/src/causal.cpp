#include "egren/causal.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include <fmt/core.h>

#include "egren/errors.hpp"

namespace egren {

mpq_class parse_rational(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    auto bad = [&] { fail(ErrorKind::Parse, fmt::format("not an exact rational: '{}'", s)); };
    if (s.empty()) bad();
    if (s.find('/') != std::string_view::npos) {
        const auto slash = s.find('/');
        auto digits = [](std::string_view t, bool sign_ok) {
            if (sign_ok && !t.empty() && (t[0] == '-' || t[0] == '+')) t.remove_prefix(1);
            return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
        };
        if (!digits(s.substr(0, slash), true) || !digits(s.substr(slash + 1), false)) bad();
        std::string num(s.substr(0, slash));
        if (num[0] == '+') num.erase(0, 1);
        mpz_class p(num, 10), q(std::string(s.substr(slash + 1)), 10);
        if (q == 0) fail(ErrorKind::Parse, fmt::format("zero denominator in '{}'", s));
        mpq_class r(p, q);
        r.canonicalize();
        return r;
    }
    // decimal: [sign] digits [. digits] [e [sign] digits]
    std::size_t i = 0;
    bool neg = false;
    if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
    std::string mant;
    long frac = 0;
    bool seen_digit = false, dot = false;
    for (; i < s.size(); ++i) {
        const char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            mant += c;
            seen_digit = true;
            if (dot) ++frac;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!seen_digit) bad();
    long ex = 0;
    if (i < s.size()) {
        if (s[i] != 'e' && s[i] != 'E') bad();
        ++i;
        bool eneg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) eneg = s[i++] == '-';
        if (i == s.size()) bad();
        for (; i < s.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) bad();
            ex = ex * 10 + (s[i] - '0');
            if (ex > 100000) bad();
        }
        if (eneg) ex = -ex;
    }
    const long p10 = ex - frac;
    mpz_class m(mant, 10), pw;
    mpz_ui_pow_ui(pw.get_mpz_t(), 10, static_cast<unsigned long>(p10 < 0 ? -p10 : p10));
    mpq_class r = p10 >= 0 ? mpq_class(m * pw) : mpq_class(m, pw);
    r.canonicalize();
    return neg ? mpq_class(-r) : r;
}

std::string format_rational(const mpq_class& q) { return q.get_str(10); }

void PointConfig::validate() const {
    require(d >= 2, fmt::format("dimension must be at least 2, got {}", d));
    require(!points.empty(), "configuration needs at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
        require(static_cast<int>(points[i].size()) == d,
                fmt::format("point {} has {} coordinates, expected {}", i + 1, points[i].size(), d));
        // gmp compares and subtracts canonical fractions only
        for (const auto& q : points[i]) {
            mpq_class c = q;
            c.canonicalize();
            require(c.get_num() == q.get_num() && c.get_den() == q.get_den(),
                    fmt::format("coordinate {} of point {} is not in lowest terms", format_rational(q), i + 1));
        }
    }
}

bool PointConfig::on_total_diagonal() const {
    for (const auto& p : points)
        if (p != points.front()) return false;
    return true;
}

std::string_view to_string(CausalRelation r) {
    switch (r) {
        case CausalRelation::StrictlyFuture: return "StrictlyFuture";
        case CausalRelation::Lightlike: return "Lightlike";
        case CausalRelation::StrictlyPast: return "StrictlyPast";
        case CausalRelation::Spacelike: return "Spacelike";
        case CausalRelation::Equal: return "Equal";
    }
    return "?";
}

mpq_class minkowski_interval(const MinkowskiPoint& x, const MinkowskiPoint& y) {
    require(x.size() == y.size() && !x.empty(), "points of different dimension");
    mpq_class dt = y[0] - x[0];
    mpq_class s = dt * dt;
    for (std::size_t k = 1; k < x.size(); ++k) {
        const mpq_class dx = y[k] - x[k];
        s -= dx * dx;
    }
    return s;
}

CausalVerdict classify_pair(const MinkowskiPoint& x, const MinkowskiPoint& y) {
    const mpq_class s = minkowski_interval(x, y);
    const int ts = sgn(mpq_class(y[0] - x[0]));
    if (x == y) return {CausalRelation::Equal, 0};
    if (s < 0) return {CausalRelation::Spacelike, ts};
    if (s == 0) return {CausalRelation::Lightlike, ts};  // ts != 0 since x != y
    return {ts > 0 ? CausalRelation::StrictlyFuture : CausalRelation::StrictlyPast, ts};
}

bool in_causal_past(const MinkowskiPoint& x, const MinkowskiPoint& y) {
    // y relative to x is future (or equal)
    const CausalVerdict v = classify_pair(x, y);
    return v.relation == CausalRelation::Equal || v.future();
}

void validate_subset(const Subset& s, int n, bool proper) {
    require(!s.empty(), "subset must be nonempty");
    for (std::size_t k = 0; k < s.size(); ++k) {
        require(s[k] >= 1 && s[k] <= n, fmt::format("index {} out of range 1..{}", s[k], n));
        if (k > 0) require(s[k] > s[k - 1], "subset indices must be strictly increasing");
    }
    if (proper) require(static_cast<int>(s.size()) < n, "subset must be proper");
}

Subset complement(const Subset& s, int n) {
    Subset c;
    for (int i = 1; i <= n; ++i)
        if (!std::binary_search(s.begin(), s.end(), i)) c.push_back(i);
    return c;
}

std::string format_subset(const Subset& s) {
    std::string out = "{";
    for (std::size_t k = 0; k < s.size(); ++k) out += (k ? "," : "") + std::to_string(s[k]);
    return out + "}";
}

namespace {

using Mask = std::uint32_t;
constexpr int kMaxPoints = 20;

Subset from_mask(Mask m) {
    Subset s;
    for (int i = 0; i < 32; ++i)
        if (m & (Mask{1} << i)) s.push_back(i + 1);
    return s;
}

Mask to_mask(const Subset& s) {
    Mask m = 0;
    for (int i : s) m |= Mask{1} << (i - 1);
    return m;
}

// past[i] bit j: x_i in J^-(x_j)
std::vector<Mask> past_matrix(const PointConfig& cfg) {
    const int n = cfg.size();
    std::vector<Mask> past(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (in_causal_past(cfg[i], cfg[j])) past[static_cast<std::size_t>(i)] |= Mask{1} << j;
    return past;
}

bool member_mask(const std::vector<Mask>& past, Mask I, Mask all) {
    const Mask Ic = all & ~I;
    for (std::size_t i = 0; i < past.size(); ++i)
        if ((I >> i & 1) && (past[i] & Ic)) return false;
    return true;
}

void check_size(const PointConfig& cfg) {
    cfg.validate();
    require(cfg.size() <= kMaxPoints, fmt::format("at most {} points supported, got {}", kMaxPoints, cfg.size()));
}

}  // namespace

bool c_i_member(const PointConfig& cfg, const Subset& I) {
    check_size(cfg);
    validate_subset(I, cfg.size(), true);
    for (int i : I)
        for (int j = 1; j <= cfg.size(); ++j)
            if (!std::binary_search(I.begin(), I.end(), j) && in_causal_past(cfg[i - 1], cfg[j - 1])) return false;
    return true;
}

CoverResult cover_witness(const PointConfig& cfg) {
    check_size(cfg);
    CoverResult r;
    if (cfg.on_total_diagonal()) {
        r.on_diagonal = true;
        return r;
    }
    const int n = cfg.size();
    const auto past = past_matrix(cfg);
    const Mask all = (Mask{1} << n) - 1;
    for (Mask I = 1; I < all; ++I)
        if (member_mask(past, I, all)) r.members.push_back(from_mask(I));
    std::sort(r.members.begin(), r.members.end(), [](const Subset& a, const Subset& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    // some member always exists off the total diagonal
    if (r.members.empty()) fail(ErrorKind::InvalidArgument, "no causal cover member found off the diagonal");
    r.witness = r.members.front();
    return r;
}

mpq_class PartitionWeights::weight(const Subset& I) const {
    for (const auto& [s, w] : weights)
        if (s == I) return w;
    return 0;
}

mpq_class PartitionWeights::total() const {
    mpq_class t = 0;
    for (const auto& [s, w] : weights) t += w;
    return t;
}

mpq_class causal_margin(const MinkowskiPoint& xi, const MinkowskiPoint& xj) {
    const CausalVerdict v = classify_pair(xj, xi);
    if (v.relation == CausalRelation::Equal || v.past()) return 0;
    if (v.future()) {
        const mpq_class dt = xi[0] - xj[0];
        return dt * dt;
    }
    return -minkowski_interval(xi, xj);
}

PartitionWeights partition_weights(const PointConfig& cfg) {
    check_size(cfg);
    if (cfg.on_total_diagonal()) fail(ErrorKind::OnDiagonal, "configuration lies on the total diagonal");
    const int n = cfg.size();
    const CoverResult cover = cover_witness(cfg);
    PartitionWeights pw;
    mpq_class sum = 0;
    for (const auto& I : cover.members) {
        mpq_class m;
        bool first = true;
        for (int i : I)
            for (int j : complement(I, n)) {
                const mpq_class g = causal_margin(cfg[i - 1], cfg[j - 1]);
                if (first || g < m) m = g;
                first = false;
            }
        if (m > 0) {
            pw.weights.push_back({I, m});
            sum += m;
        }
    }
    for (auto& [I, w] : pw.weights) w /= sum;
    return pw;
}

std::string TOWord::str() const {
    std::string out;
    for (const auto& f : factors) out += "T(" + format_subset(f.set) + ")";
    return out.empty() ? "1" : out;
}

namespace {

bool mutually_spacelike(const PointConfig& cfg, const Subset& a, const Subset& b) {
    for (int i : a)
        for (int j : b)
            if (classify_pair(cfg[i - 1], cfg[j - 1]).relation != CausalRelation::Spacelike) return false;
    return true;
}

// admissible first parts S1 of S = S1 u S2: no point of S1 in J^- of a point of S2
std::vector<Mask> admissible_splits(const std::vector<Mask>& past, Mask S) {
    std::vector<Mask> out;
    for (Mask s1 = (S - 1) & S; s1 != 0; s1 = (s1 - 1) & S) {
        const Mask s2 = S & ~s1;
        bool ok = true;
        for (std::size_t i = 0; i < past.size() && ok; ++i)
            if ((s1 >> i & 1) && (past[i] & s2)) ok = false;
        if (ok) out.push_back(s1);
    }
    return out;
}

}  // namespace

TOWord causal_factorize(const TOWord& word, const PointConfig& cfg, const FactorizeOptions& opt) {
    check_size(cfg);
    const int n = cfg.size();
    Mask used = 0;
    for (const auto& f : word.factors) {
        validate_subset(f.set, n, false);
        const Mask m = to_mask(f.set);
        require((used & m) == 0, fmt::format("factors of {} are not disjoint", word.str()));
        used |= m;
    }
    const auto past = past_matrix(cfg);
    std::optional<std::mt19937_64> rng;
    if (opt.shuffle_seed) rng.emplace(*opt.shuffle_seed);
    auto log = [&](const std::string& s) {
        if (opt.trace) opt.trace->push_back(s);
    };

    // split phase
    std::vector<Mask> w;
    for (const auto& f : word.factors) w.push_back(to_mask(f.set));
    std::vector<char> done(w.size(), 0);
    for (;;) {
        std::vector<std::size_t> open;
        for (std::size_t k = 0; k < w.size(); ++k)
            if (!done[k]) open.push_back(k);
        if (open.empty()) break;
        std::size_t k = open.front();
        if (rng) k = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(*rng)];
        const auto splits = admissible_splits(past, w[k]);
        if (splits.empty()) {
            done[k] = 1;
            continue;
        }
        Mask s1;
        if (rng) {
            s1 = splits[std::uniform_int_distribution<std::size_t>(0, splits.size() - 1)(*rng)];
        } else {
            s1 = *std::min_element(splits.begin(), splits.end(),
                                   [](Mask a, Mask b) { return from_mask(a) < from_mask(b); });
        }
        const Mask s2 = w[k] & ~s1;
        log(fmt::format("split T({}) -> T({})T({})", format_subset(from_mask(w[k])), format_subset(from_mask(s1)),
                        format_subset(from_mask(s2))));
        w[k] = s1;
        w.insert(w.begin() + static_cast<std::ptrdiff_t>(k) + 1, s2);
        done.insert(done.begin() + static_cast<std::ptrdiff_t>(k) + 1, 0);
    }

    // normal form of the trace: repeatedly take the factor with the least
    // smallest index among those that commute with everything before them
    std::vector<Subset> rest;
    for (Mask m : w) rest.push_back(from_mask(m));
    if (rng) {
        // random valid commutations first; the normal form must absorb them
        for (int it = 0; it < 4 * static_cast<int>(rest.size()); ++it) {
            if (rest.size() < 2) break;
            const std::size_t p = std::uniform_int_distribution<std::size_t>(0, rest.size() - 2)(*rng);
            if (mutually_spacelike(cfg, rest[p], rest[p + 1])) std::swap(rest[p], rest[p + 1]);
        }
    }
    TOWord out;
    while (!rest.empty()) {
        std::size_t best = rest.size();
        for (std::size_t p = 0; p < rest.size(); ++p) {
            bool free = true;
            for (std::size_t q = 0; q < p && free; ++q) free = mutually_spacelike(cfg, rest[q], rest[p]);
            if (free && (best == rest.size() || rest[p].front() < rest[best].front())) best = p;
        }
        if (best != 0) log(fmt::format("commute T({}) to the front", format_subset(rest[best])));
        TOFactor f{rest[best], false};
        f.unsplittable = f.set.size() > 1;
        out.factors.push_back(std::move(f));
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(best));
    }
    log("normal form " + out.str());
    return out;
}

bool glue_consistency(const PointConfig& cfg, const Subset& I1, const Subset& I2, std::vector<std::string>* trace) {
    check_size(cfg);
    const int n = cfg.size();
    for (const Subset* I : {&I1, &I2})
        if (!c_i_member(cfg, *I))
            fail(ErrorKind::MembershipViolated,
                 fmt::format("configuration is not in C_I for I = {}", format_subset(*I)));
    FactorizeOptions opt;
    opt.trace = trace;
    const TOWord a = causal_factorize(TOWord{{{I1, false}, {complement(I1, n), false}}}, cfg, opt);
    const TOWord b = causal_factorize(TOWord{{{I2, false}, {complement(I2, n), false}}}, cfg, opt);
    return a == b;
}

}  // namespace egren
