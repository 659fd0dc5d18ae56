#include "smallgain/scalar_fn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace smallgain {

namespace {

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

const char* to_string(FnClass c) {
    switch (c) {
        case FnClass::Monotone: return "Monotone";
        case FnClass::PositiveAffine: return "PositiveAffine";
        case FnClass::K: return "K";
        case FnClass::Kinf: return "Kinf";
    }
    return "?";
}

struct ScalarFn::Node {
    enum class Kind { Identity, Constant, Linear, Power, Saturation, Sum, Compose, Inverse, Min };

    Kind kind;
    double p = 0;               // node parameter (c, k, exponent, a)
    std::vector<ScalarFn> kid;  // children; Compose stores {outer, inner}

    double eval(double s) const;
};

namespace {

using Node = ScalarFn::Node;
using Kind = Node::Kind;

// Bisection for y = f(s) on [0, hi]; f monotone non-decreasing (strictness is
// the caller's precondition).
double bisect(const ScalarFn& f, double y, double hi) {
    double f0 = f.eval_unchecked(0.0);
    if (y < f0) {
        throw RangeExceeded("inversion target " + fmt_num(y) + " below f(0) = " + fmt_num(f0));
    }
    if (y == f0) return 0.0;
    double fh = f.eval_unchecked(hi);
    if (y > fh) {
        throw RangeExceeded("inversion target " + fmt_num(y) + " above f(" + fmt_num(hi) +
                            ") = " + fmt_num(fh) + "; enlarge the cap");
    }
    double lo = 0.0;
    for (int i = 0; i < 220; ++i) {
        if (hi - lo <= lo * 4e-16) break;  // bracket collapsed to a few ulp
        double mid = 0.5 * (lo + hi);
        double fm = f.eval_unchecked(mid);
        if (fm < y)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Largest s in [0, g.cap] with g(s) <= y; g monotone non-decreasing.
double sup_below(const ScalarFn& g, double y) {
    double hi = g.cap();
    if (g.eval_unchecked(hi) <= y) return hi;
    if (g.eval_unchecked(0.0) > y) return 0.0;
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        if (hi - lo <= 1e-14 * std::max(1.0, lo)) break;
        double mid = 0.5 * (lo + hi);
        if (g.eval_unchecked(mid) <= y)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace

double ScalarFn::Node::eval(double s) const {
    switch (kind) {
        case Kind::Identity: return s;
        case Kind::Constant: return p;
        case Kind::Linear: return p * s;
        case Kind::Power: return s == 0.0 ? 0.0 : std::pow(s, p);
        case Kind::Saturation: return p * s / (1.0 + s);
        case Kind::Sum: return kid[0].eval_unchecked(s) + kid[1].eval_unchecked(s);
        case Kind::Compose: return kid[0].eval_unchecked(kid[1].eval_unchecked(s));
        case Kind::Min: return std::min(kid[0].eval_unchecked(s), kid[1].eval_unchecked(s));
        case Kind::Inverse: {
            const ScalarFn& f = kid[0];
            double f0 = f.eval_unchecked(0.0);
            if (s == f0) return 0.0;  // exact zero-at-zero for class-K inner trees
            return bisect(f, s, f.cap());
        }
    }
    return 0;
}

ScalarFn::ScalarFn(std::shared_ptr<const Node> node, double cap, FnClass cls, bool strict, bool zaz)
    : node_(std::move(node)), cap_(cap), cls_(cls), strict_(strict), zaz_(zaz) {}

ScalarFn::ScalarFn() : ScalarFn(identity()) {}

ScalarFn ScalarFn::identity(double cap) {
    return ScalarFn(std::make_shared<Node>(Node{Kind::Identity, 0, {}}), cap, FnClass::Kinf, true, true);
}

ScalarFn ScalarFn::constant(double c, double cap) {
    if (c < 0) throw ClassClosureError("constant node requires c >= 0");
    return ScalarFn(std::make_shared<Node>(Node{Kind::Constant, c, {}}), cap, FnClass::Monotone, false, c == 0.0);
}

ScalarFn ScalarFn::linear(double k, double cap) {
    if (k <= 0) throw ClassClosureError("linear node requires k > 0");
    return ScalarFn(std::make_shared<Node>(Node{Kind::Linear, k, {}}), cap, FnClass::Kinf, true, true);
}

ScalarFn ScalarFn::power(double p, double cap) {
    if (p <= 0) throw ClassClosureError("power node requires p > 0");
    return ScalarFn(std::make_shared<Node>(Node{Kind::Power, p, {}}), cap, FnClass::Kinf, true, true);
}

ScalarFn ScalarFn::saturation(double a, double cap) {
    if (a <= 0) throw ClassClosureError("saturation node requires a > 0");
    return ScalarFn(std::make_shared<Node>(Node{Kind::Saturation, a, {}}), cap, FnClass::K, true, true);
}

ScalarFn ScalarFn::numeric_inverse(const ScalarFn& f) {
    if (!f.strict_) {
        throw NotStrictlyIncreasing("numeric inverse requires a strictly increasing tree: " + f.to_string());
    }
    double cap = f.eval_unchecked(f.cap());
    FnClass cls = is_class_k(f.cls_) ? f.cls_ : FnClass::Monotone;
    return ScalarFn(std::make_shared<Node>(Node{Kind::Inverse, 0, {f}}), cap, cls, true, f.zaz_);
}

ScalarFn ScalarFn::inverse_of(const ScalarFn& f) {
    if (auto k = f.linear_slope()) {
        if (*k > 0) return linear(1.0 / *k, *k * f.cap());
        throw NotStrictlyIncreasing("inverse of the zero function");
    }
    if (f.node_->kind == Node::Kind::Power) {
        return power(1.0 / f.node_->p, f.eval_unchecked(f.cap()));
    }
    return numeric_inverse(f);
}

double ScalarFn::eval(double s) const {
    if (!(s >= 0.0)) throw DomainExceeded("argument " + fmt_num(s) + " is negative or NaN");
    if (s > cap_ * (1.0 + 1e-12)) {
        throw DomainExceeded("argument " + fmt_num(s) + " exceeds cap " + fmt_num(cap_));
    }
    return node_->eval(s);
}

double ScalarFn::eval_unchecked(double s) const { return node_->eval(s); }

ScalarFn ScalarFn::with_cap(double new_cap) const {
    if (new_cap <= 0) throw DomainExceeded("cap must be positive");
    return ScalarFn(node_, new_cap, cls_, strict_, zaz_);
}

ScalarFn ScalarFn::with_class(FnClass declared) const {
    return ScalarFn(node_, cap_, declared, strict_, zaz_);
}

std::optional<double> ScalarFn::linear_slope() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Identity: return 1.0;
        case Kind::Linear: return n.p;
        case Kind::Power: return n.p == 1.0 ? std::optional<double>(1.0) : std::nullopt;
        case Kind::Constant: return n.p == 0.0 ? std::optional<double>(0.0) : std::nullopt;
        case Kind::Saturation: return std::nullopt;
        case Kind::Sum: {
            auto a = n.kid[0].linear_slope(), b = n.kid[1].linear_slope();
            if (a && b) return *a + *b;
            return std::nullopt;
        }
        case Kind::Compose: {
            auto a = n.kid[0].linear_slope(), b = n.kid[1].linear_slope();
            if (a && b) return *a * *b;
            return std::nullopt;
        }
        case Kind::Min: {
            auto a = n.kid[0].linear_slope(), b = n.kid[1].linear_slope();
            if (a && b) return std::min(*a, *b);
            return std::nullopt;
        }
        case Kind::Inverse: {
            auto a = n.kid[0].linear_slope();
            if (a && *a > 0) return 1.0 / *a;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

bool ScalarFn::is_zero() const {
    auto k = linear_slope();
    return k && *k == 0.0 && zaz_;
}

std::string ScalarFn::to_string() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Identity: return "s";
        case Kind::Constant: return fmt_num(n.p);
        case Kind::Linear: return fmt_num(n.p) + "*s";
        case Kind::Power: return "s^" + fmt_num(n.p);
        case Kind::Saturation: return fmt_num(n.p) + "*s/(1+s)";
        case Kind::Sum: return "(" + n.kid[0].to_string() + " + " + n.kid[1].to_string() + ")";
        case Kind::Compose: return "(" + n.kid[0].to_string() + " . " + n.kid[1].to_string() + ")";
        case Kind::Inverse: return "inv(" + n.kid[0].to_string() + ")";
        case Kind::Min: return "min(" + n.kid[0].to_string() + ", " + n.kid[1].to_string() + ")";
    }
    return "?";
}

namespace {

FnClass join_sum(const ScalarFn& f, const ScalarFn& g) {
    if (is_class_k(f.fn_class()) && is_class_k(g.fn_class())) {
        return (f.fn_class() == FnClass::Kinf || g.fn_class() == FnClass::Kinf) ? FnClass::Kinf : FnClass::K;
    }
    // constant + class-K reads as a positive-affine bound
    if ((is_class_k(f.fn_class()) && !g.strictly_increasing()) ||
        (is_class_k(g.fn_class()) && !f.strictly_increasing())) {
        return FnClass::PositiveAffine;
    }
    return FnClass::Monotone;
}

FnClass join_compose(const ScalarFn& f, const ScalarFn& g) {
    if (is_class_k(f.fn_class()) && is_class_k(g.fn_class())) {
        // unbounded only when both factors are unbounded
        return (f.fn_class() == FnClass::Kinf && g.fn_class() == FnClass::Kinf) ? FnClass::Kinf : FnClass::K;
    }
    return FnClass::Monotone;
}

}  // namespace

ScalarFn compose(const ScalarFn& f, const ScalarFn& g) {
    if (f.is_zero() || (g.is_zero() && f.zero_at_zero())) {
        return ScalarFn::zero(g.cap());
    }
    double cap = g.cap();
    if (g.eval_unchecked(cap) > f.cap()) cap = sup_below(g, f.cap());
    if (cap <= 0) {
        throw ClassClosureError("composition has an empty certified domain: inner " + g.to_string() +
                                " starts above the outer cap");
    }
    auto node = std::make_shared<ScalarFn::Node>(Node{Kind::Compose, 0, {f, g}});
    return ScalarFn(std::move(node), cap, join_compose(f, g),
                    f.strictly_increasing() && g.strictly_increasing(),
                    f.zero_at_zero() && g.zero_at_zero());
}

ScalarFn sum(const ScalarFn& f, const ScalarFn& g) {
    if (f.is_zero()) return g;
    if (g.is_zero()) return f;
    auto node = std::make_shared<ScalarFn::Node>(Node{Kind::Sum, 0, {f, g}});
    return ScalarFn(std::move(node), std::min(f.cap(), g.cap()), join_sum(f, g),
                    f.strictly_increasing() || g.strictly_increasing(),
                    f.zero_at_zero() && g.zero_at_zero());
}

ScalarFn fn_min(const ScalarFn& f, const ScalarFn& g) {
    auto node = std::make_shared<ScalarFn::Node>(Node{Kind::Min, 0, {f, g}});
    return ScalarFn(std::move(node), std::min(f.cap(), g.cap()), FnClass::Monotone,
                    f.strictly_increasing() && g.strictly_increasing(),
                    f.zero_at_zero() || g.zero_at_zero());
}

ScalarFn scaled(double k, const ScalarFn& f) {
    if (k == 0.0 || f.is_zero()) return ScalarFn::zero(f.cap());
    return compose(ScalarFn::linear(k, std::numeric_limits<double>::max()), f);
}

ScalarFn id_plus(const ScalarFn& f) { return sum(ScalarFn::identity(f.cap()), f); }

double invert(const ScalarFn& f, double y) {
    if (!f.strictly_increasing()) {
        throw NotStrictlyIncreasing("invert() requires a strictly increasing function: " + f.to_string());
    }
    return bisect(f, y, f.cap());
}

ClassReport classify(const ScalarFn& f, int n_grid, const ClassifyOptions& opts) {
    if (n_grid < 2) n_grid = 2;
    ClassReport rep;
    double cap = f.cap();
    rep.zero_at_zero = f.eval_unchecked(0.0) == 0.0;
    rep.top_value = f.eval_unchecked(cap);

    // mixed grid: log-spaced below min(1, cap), linear above
    std::vector<double> grid;
    grid.reserve(static_cast<size_t>(n_grid) + 2);
    grid.push_back(0.0);
    double knee = std::min(1.0, cap);
    int n_log = n_grid / 2, n_lin = n_grid - n_log;
    double lo = knee * 1e-9;
    for (int i = 0; i < n_log; ++i) {
        grid.push_back(lo * std::pow(knee / lo, double(i) / std::max(1, n_log - 1)));
    }
    if (cap > knee) {
        for (int i = 1; i <= n_lin; ++i) grid.push_back(knee + (cap - knee) * double(i) / n_lin);
    }

    bool strict = true, nondec = true;
    double prev = f.eval_unchecked(grid[0]);
    for (size_t i = 1; i < grid.size(); ++i) {
        double v = f.eval_unchecked(grid[i]);
        double drop = prev - v;
        double rel = drop / std::max(1.0, std::abs(prev));
        if (rel > rep.worst_violation) {
            rep.worst_violation = rel;
            rep.worst_s = grid[i];
        }
        if (rel > opts.eps_mono) nondec = false;
        if (v <= prev) strict = false;
        prev = v;
    }
    rep.strictly_increasing = strict;
    rep.nondecreasing = nondec;

    double required = opts.kinf_required_range > 0 ? opts.kinf_required_range : std::sqrt(cap);
    rep.unbounded = rep.top_value >= 0.9 * required;
    return rep;
}

bool ClassReport::consistent_with(FnClass declared) const {
    switch (declared) {
        case FnClass::K: return zero_at_zero && strictly_increasing;
        case FnClass::Kinf: return zero_at_zero && strictly_increasing && unbounded;
        case FnClass::PositiveAffine: return strictly_increasing;
        case FnClass::Monotone: return nondecreasing;
    }
    return false;
}

SplitWitness weak_triangle_split(const ScalarFn& gamma, const ScalarFn& rho, double a, double b) {
    if (a < 0 || b < 0) throw DomainExceeded("weak triangle requires a, b >= 0");
    double lhs = gamma.eval(a + b);
    double rhs = gamma.eval(a + rho.eval(a)) + gamma.eval(b + invert(rho, b));
    return SplitWitness{lhs, rhs, rhs - lhs};
}

IdentityReport verify_inverse_identity(const ScalarFn& rho, int n_grid) {
    ScalarFn ipr = id_plus(rho);  // Id + rho, strictly increasing
    double cap = rho.cap();
    // g(x) = x - (Id+rho)^-1(x), strictly increasing with range [0, g(cap)]
    auto g = [&](double x) { return x - invert(ipr, x); };
    double s_hi = std::min(g(cap), rho.eval_unchecked(cap)) * 0.999;

    IdentityReport rep;
    rep.n_grid = n_grid;
    rep.s_hi = s_hi;
    for (int i = 0; i <= n_grid; ++i) {
        double s = s_hi * double(i) / n_grid;
        // lhs: solve g(x) = s for x
        double lo = 0.0, hi = cap;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, lo); ++it) {
            double mid = 0.5 * (lo + hi);
            if (g(mid) < s)
                lo = mid;
            else
                hi = mid;
        }
        double lhs = 0.5 * (lo + hi);
        double rhs = s + invert(rho, s);
        double err = std::abs(lhs - rhs);
        if (err > rep.max_error) {
            rep.max_error = err;
            rep.worst_s = s;
        }
    }
    return rep;
}

}  // namespace smallgain
