#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smallgain/errors.hpp"

namespace smallgain {

/// Regularity class of a scalar comparison function on [0, cap].
///
/// K     : continuous, strictly increasing, zero at zero.
/// Kinf  : class K and unbounded.
/// PositiveAffine : k*s + c with k > 0, c > 0 (strictly increasing, not K).
/// Monotone : non-decreasing only; the weakest class in the algebra.
enum class FnClass { Monotone, PositiveAffine, K, Kinf };

const char* to_string(FnClass c);

inline bool is_class_k(FnClass c) { return c == FnClass::K || c == FnClass::Kinf; }

/// Default certified evaluation cap (per-problem S_max overrides it).
inline constexpr double kDefaultCap = 1e6;

/// Enlarged cap used when gains are re-capped for certificate composition,
/// so composite trees keep a usable domain after cap propagation.
inline constexpr double kComposeCap = 1e12;

inline constexpr double kEpsInv = 1e-9;    ///< inversion tolerance
inline constexpr double kEpsMono = 1e-12;  ///< relative strictness tolerance

/// Immutable expression tree for a nonnegative, monotone scalar function of
/// one nonnegative variable.
///
/// Node grammar: identity, constant c >= 0, linear k*s (k > 0), power s^p
/// (p > 0), bounded saturation a*s/(1+s) (a > 0), sum, composition,
/// numeric inverse, pointwise min. Trees are immutable after construction
/// and carry a certified domain cap, a derived (or declared) class, and
/// structural strictness / zero-at-zero flags. Evaluation is pure and
/// reentrant; numeric-inverse nodes memoize nothing.
class ScalarFn {
public:
    struct Node;  // expression node; defined with the implementation

    /// Defaults to the identity on the default cap.
    ScalarFn();

    static ScalarFn identity(double cap = kDefaultCap);
    static ScalarFn constant(double c, double cap = kDefaultCap);
    static ScalarFn zero(double cap = kDefaultCap) { return constant(0.0, cap); }
    static ScalarFn linear(double k, double cap = kDefaultCap);
    static ScalarFn power(double p, double cap = kDefaultCap);
    static ScalarFn saturation(double a, double cap = kDefaultCap);

    /// Bisection-backed inverse node. Requires f strictly increasing.
    static ScalarFn numeric_inverse(const ScalarFn& f);

    /// Inverse with closed forms where the tree is recognizably identity,
    /// pure linear or a pure power; numeric_inverse otherwise.
    static ScalarFn inverse_of(const ScalarFn& f);

    /// Evaluate at s in [0, cap]. Exact 0 at s = 0 for zero-at-zero trees.
    /// Throws DomainExceeded outside the cap; interior numeric-inverse nodes
    /// may throw RangeExceeded when their bracket is exhausted.
    double eval(double s) const;
    double operator()(double s) const { return eval(s); }

    /// Evaluate without the top-level cap check (inverse brackets still apply).
    double eval_unchecked(double s) const;

    double cap() const { return cap_; }
    FnClass fn_class() const { return cls_; }
    bool strictly_increasing() const { return strict_; }
    bool zero_at_zero() const { return zaz_; }

    /// Same tree with a different cap annotation. The annotation is checked at
    /// the public eval() entry; inverse-node brackets are fixed at construction.
    ScalarFn with_cap(double new_cap) const;

    /// Same tree with a declared class (validated separately via classify()).
    ScalarFn with_class(FnClass declared) const;

    /// Exact slope if the tree is k*s for some k >= 0 (identity, linear,
    /// and their sums/compositions), nullopt otherwise.
    std::optional<double> linear_slope() const;

    /// True when the tree is the constant-zero function.
    bool is_zero() const;

    /// Grammar-compatible rendering, e.g. "(0.5*s . (s + inv(s^2)))".
    std::string to_string() const;

    friend ScalarFn compose(const ScalarFn& f, const ScalarFn& g);
    friend ScalarFn sum(const ScalarFn& f, const ScalarFn& g);
    friend ScalarFn fn_min(const ScalarFn& f, const ScalarFn& g);

private:
    ScalarFn(std::shared_ptr<const Node> node, double cap, FnClass cls, bool strict, bool zaz);

    std::shared_ptr<const Node> node_;
    double cap_;
    FnClass cls_;
    bool strict_;
    bool zaz_;
};

/// f after g: (f . g)(s) = f(g(s)). The derived cap is the largest s with
/// g(s) inside f's cap. Class: K/Kinf closure per the algebra; a composite is
/// Kinf only when both factors are Kinf.
ScalarFn compose(const ScalarFn& f, const ScalarFn& g);

/// Pointwise sum. Kinf when either summand is Kinf and the other at least K.
ScalarFn sum(const ScalarFn& f, const ScalarFn& g);

/// Pointwise min. Always class Monotone.
ScalarFn fn_min(const ScalarFn& f, const ScalarFn& g);

/// k * f as linear(k) . f.
ScalarFn scaled(double k, const ScalarFn& f);

/// Id + f on f's cap.
ScalarFn id_plus(const ScalarFn& f);

/// Solve f(s) = y by bracketed bisection on [0, f.cap()].
/// Requires f strictly increasing and y within [f(0), f(cap)].
double invert(const ScalarFn& f, double y);

struct ClassifyOptions {
    double eps_mono = kEpsMono;       ///< relative tolerance for monotone violations
    double kinf_required_range = 0;   ///< 0 selects the default sqrt(cap) heuristic
};

/// Numeric class-membership report over a mixed log/linear grid.
struct ClassReport {
    bool zero_at_zero = false;
    bool strictly_increasing = false;
    bool nondecreasing = false;
    double worst_violation = 0;  ///< largest relative decrease observed
    double worst_s = 0;
    bool unbounded = false;      ///< heuristic: f(cap) >= 0.9 * required range
    double top_value = 0;        ///< f(cap)

    /// Whether the report supports the given declared class.
    bool consistent_with(FnClass declared) const;
};

/// Sample f on n_grid points (log-spaced below 1, linear above) and report
/// zero-at-zero, strictness and the unboundedness heuristic. Never throws on
/// class violations; the report carries them.
ClassReport classify(const ScalarFn& f, int n_grid = 512, const ClassifyOptions& opts = {});

/// Witness of the weak triangular inequality
///   gamma(a+b) <= gamma((Id+rho)(a)) + gamma((Id+rho^-1)(b)).
struct SplitWitness {
    double lhs;
    double rhs;
    double slack;  ///< rhs - lhs, nonnegative up to roundoff
};

SplitWitness weak_triangle_split(const ScalarFn& gamma, const ScalarFn& rho, double a, double b);

/// Grid check of the inverse identity [Id - (Id+rho)^-1]^-1 = Id + rho^-1.
struct IdentityReport {
    double max_error = 0;
    double worst_s = 0;
    int n_grid = 0;
    double s_hi = 0;  ///< upper end of the checked range
};

IdentityReport verify_inverse_identity(const ScalarFn& rho, int n_grid = 256);

}  // namespace smallgain
