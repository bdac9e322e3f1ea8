#include "egren/jet.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "egren/errors.hpp"

namespace egren {

JetLayout::JetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
    indices_ = multi_indices_up_to(nvars, order);
    degree_.reserve(indices_.size());
    for (const auto& a : indices_) degree_.push_back(egren::order(a));
    for (std::size_t i = 0; i < indices_.size(); ++i)
        for (std::size_t j = 0; j < indices_.size(); ++j) {
            if (degree_[i] + degree_[j] > order_) continue;
            products_.push_back({static_cast<int>(i), static_cast<int>(j),
                                 position(add(indices_[i], indices_[j]))});
        }
}

const JetLayout& JetLayout::get(int nvars, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> cache;
    require(nvars >= 0 && order >= 0, "jet layout needs nonnegative sizes");
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{nvars, order}];
    if (!slot) slot = std::make_unique<JetLayout>(nvars, order);
    return *slot;
}

int JetLayout::position(const MultiIndex& alpha) const {
    const int k = egren::order(alpha);
    if (k > order_) return -1;
    // indices are grouped by degree; scan within the degree block
    std::size_t start = 0;
    while (start < indices_.size() && degree_[start] < k) ++start;
    for (std::size_t i = start; i < indices_.size() && degree_[i] == k; ++i)
        if (indices_[i] == alpha) return static_cast<int>(i);
    return -1;
}

Jet::Jet(const JetLayout& layout, double constant) : layout_(&layout), c_(layout.size(), 0.0) {
    c_[0] = constant;
}

Jet Jet::variable(const JetLayout& layout, int var, double value) {
    Jet j(layout, value);
    if (layout.order() >= 1) j.c_[static_cast<std::size_t>(1 + var)] = 1.0;
    return j;
}

double Jet::coeff(const MultiIndex& alpha) const {
    const int p = layout_->position(alpha);
    return p < 0 ? 0.0 : c_[static_cast<std::size_t>(p)];
}

double Jet::derivative(const MultiIndex& alpha) const { return coeff(alpha) * factorial(alpha); }

bool Jet::is_zero() const {
    for (double c : c_)
        if (c != 0.0) return false;
    return true;
}

Jet& Jet::operator+=(const Jet& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (double& c : c_) c *= s;
    return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
    Jet r(*a.layout_);
    if (a.layout_->order() == 0) {
        r.c_[0] = a.c_[0] * b.c_[0];
        return r;
    }
    for (const auto& p : a.layout_->products())
        r.c_[static_cast<std::size_t>(p.out)] +=
            a.c_[static_cast<std::size_t>(p.lhs)] * b.c_[static_cast<std::size_t>(p.rhs)];
    return r;
}

Jet operator/(const Jet& a, const Jet& b) { return a * pow(b, -1.0); }

Jet Jet::compose(std::span<const double> taylor) const {
    const int k_max = layout_->order();
    Jet h = *this;
    h.c_[0] = 0.0;
    Jet r(*layout_, taylor[static_cast<std::size_t>(k_max)]);
    for (int k = k_max - 1; k >= 0; --k) {
        r = r * h;
        r.c_[0] += taylor[static_cast<std::size_t>(k)];
    }
    return r;
}

std::vector<double> exp_series(double a, int order) {
    std::vector<double> t(static_cast<std::size_t>(order + 1));
    const double e = std::exp(a);
    double f = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k) f *= k;
        t[static_cast<std::size_t>(k)] = e / f;
    }
    return t;
}

std::vector<double> log_series(double a, int order) {
    std::vector<double> t(static_cast<std::size_t>(order + 1));
    t[0] = std::log(a);
    double p = 1.0;
    for (int k = 1; k <= order; ++k) {
        p *= a;
        t[static_cast<std::size_t>(k)] = ((k % 2) ? 1.0 : -1.0) / (k * p);
    }
    return t;
}

std::vector<double> pow_series(double a, double p, int order) {
    std::vector<double> t(static_cast<std::size_t>(order + 1));
    double c = 1.0;  // binomial(p, k)
    for (int k = 0; k <= order; ++k) {
        if (k) c *= (p - (k - 1)) / k;
        t[static_cast<std::size_t>(k)] = c * std::pow(a, p - k);
    }
    return t;
}

std::vector<double> sin_series(double a, int order) {
    std::vector<double> t(static_cast<std::size_t>(order + 1));
    const double s = std::sin(a), c = std::cos(a);
    const double cyc[4] = {s, c, -s, -c};
    double f = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k) f *= k;
        t[static_cast<std::size_t>(k)] = cyc[k % 4] / f;
    }
    return t;
}

std::vector<double> cos_series(double a, int order) {
    std::vector<double> t(static_cast<std::size_t>(order + 1));
    const double s = std::sin(a), c = std::cos(a);
    const double cyc[4] = {c, -s, -c, s};
    double f = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k) f *= k;
        t[static_cast<std::size_t>(k)] = cyc[k % 4] / f;
    }
    return t;
}

Jet exp(const Jet& x) { return x.compose(exp_series(x.value(), x.layout().order())); }
Jet log(const Jet& x) { return x.compose(log_series(x.value(), x.layout().order())); }
Jet sin(const Jet& x) { return x.compose(sin_series(x.value(), x.layout().order())); }
Jet cos(const Jet& x) { return x.compose(cos_series(x.value(), x.layout().order())); }

Jet pow(const Jet& x, double p) {
    const double a = x.value();
    const int k_max = x.layout().order();
    if (a > 0.0) return x.compose(pow_series(a, p, k_max));
    // negative base: only integer exponents are real-valued
    if (a < 0.0 && std::floor(p) == p) {
        const double sign = (static_cast<long long>(p) % 2 == 0) ? 1.0 : -1.0;
        return sign * pow(-1.0 * x, p);
    }
    if (a == 0.0 && k_max == 0) return Jet(x.layout(), std::pow(a, p));
    if (a == 0.0 && std::floor(p) == p && p >= 0.0) {
        Jet r(x.layout(), 1.0);
        for (int k = 0; k < static_cast<int>(p); ++k) r = r * x;
        return r;
    }
    return Jet(x.layout(), std::nan(""));
}

Jet pow(const Jet& x, const Jet& p) {
    bool const_exp = true;
    for (std::size_t i = 1; i < p.layout().size(); ++i)
        if (p.coeff(i) != 0.0) const_exp = false;
    if (const_exp) return pow(x, p.value());
    return exp(p * log(x));
}

Jet sqrt(const Jet& x) { return pow(x, 0.5); }

Jet abs(const Jet& x) { return x.value() < 0.0 ? -x : x; }

}  // namespace egren
