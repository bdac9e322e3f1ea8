#include "egren/multi_index.hpp"

#include <numeric>

#include "egren/errors.hpp"

namespace egren {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::NonIntegrable: return "NonIntegrable";
        case ErrorKind::NeedsExtension: return "NeedsExtension";
        case ErrorKind::NeedsSubtraction: return "NeedsSubtraction";
        case ErrorKind::NotConverged: return "NotConverged";
        case ErrorKind::Inconclusive: return "Inconclusive";
        case ErrorKind::OrderMismatch: return "OrderMismatch";
        case ErrorKind::Schema: return "SchemaViolation";
        case ErrorKind::OnDiagonal: return "OnDiagonal";
        case ErrorKind::MembershipViolated: return "MembershipViolated";
    }
    return "Unknown";
}

ParseError::ParseError(const std::string& msg, std::size_t offset, int line, int column)
    : Error(ErrorKind::Parse, msg + " at line " + std::to_string(line) + ", column " +
                                  std::to_string(column)),
      offset_(offset),
      line_(line),
      column_(column) {}

int order(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

double factorial(const MultiIndex& alpha) {
    double f = 1.0;
    for (int a : alpha)
        for (int k = 2; k <= a; ++k) f *= k;
    return f;
}

MultiIndex zero_index(int dim) { return MultiIndex(static_cast<std::size_t>(dim), 0); }

MultiIndex unit_index(int dim, int axis) {
    MultiIndex e = zero_index(dim);
    e.at(static_cast<std::size_t>(axis)) = 1;
    return e;
}

MultiIndex add(const MultiIndex& a, const MultiIndex& b) {
    require(a.size() == b.size(), "multi-index dimension mismatch");
    MultiIndex c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

bool dominated(const MultiIndex& gamma, const MultiIndex& alpha) {
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (gamma[i] > alpha[i]) return false;
    return true;
}

double binomial(const MultiIndex& alpha, const MultiIndex& gamma) {
    double b = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        b *= static_cast<double>(choose(static_cast<std::uint64_t>(alpha[i]),
                                        static_cast<std::uint64_t>(gamma[i])));
    return b;
}

namespace {

void fill_degree(int dim, int pos, int remaining, MultiIndex& cur, std::vector<MultiIndex>& out) {
    if (pos == dim - 1) {
        cur[static_cast<std::size_t>(pos)] = remaining;
        out.push_back(cur);
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        cur[static_cast<std::size_t>(pos)] = k;
        fill_degree(dim, pos + 1, remaining - k, cur, out);
    }
}

}  // namespace

std::vector<MultiIndex> multi_indices_up_to(int dim, int max_order) {
    std::vector<MultiIndex> out;
    if (dim <= 0 || max_order < 0) {
        if (dim == 0 && max_order >= 0) out.emplace_back();
        return out;
    }
    MultiIndex cur(static_cast<std::size_t>(dim), 0);
    for (int k = 0; k <= max_order; ++k) fill_degree(dim, 0, k, cur, out);
    return out;
}

std::vector<MultiIndex> sub_indices(const MultiIndex& alpha) {
    std::vector<MultiIndex> out{MultiIndex(alpha.size(), 0)};
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const std::size_t n = out.size();
        for (int k = 1; k <= alpha[i]; ++k)
            for (std::size_t j = 0; j < n; ++j) {
                MultiIndex g = out[j];
                g[i] = k;
                out.push_back(std::move(g));
            }
    }
    return out;
}

std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        const std::uint64_t num = n - k + i;
        if (r > UINT64_MAX / num) fail(ErrorKind::InvalidArgument, "binomial overflow");
        r = r * num / i;
    }
    return r;
}

std::string to_string(const MultiIndex& alpha) {
    std::string s = "(";
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(alpha[i]);
    }
    return s + ")";
}

}  // namespace egren
