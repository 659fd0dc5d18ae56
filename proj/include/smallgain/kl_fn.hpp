#pragma once

#include <vector>

#include "smallgain/scalar_fn.hpp"

namespace smallgain {

struct KLValidateOptions {
    double eps_zero_row = 1e-12;   ///< tolerance for beta(0, t) = 0
    double eps_monotone = 1e-9;    ///< relative tolerance for grid monotonicity
    double tail_tol_rel = 1e-3;    ///< last column vs first column, relative
    bool require_tail = false;     ///< hard-fail when the tail is above tolerance
};

/// Two-argument transient bound beta(s, t): class K in s for each fixed t,
/// non-increasing to 0 in t for each fixed s, beta(0, t) = 0.
///
/// Families: exp_decay M*s*e^(-lambda*t); scaled f(s)*e^(-lambda*t) with f a
/// class-K tree; tabulated values on an (s, t) grid with bilinear
/// interpolation, clamped to the final column beyond the last t knot.
class KLFn {
public:
    enum class Family { ExpDecay, Scaled, Tabulated };

    /// Defaults to exp_decay(1, 1).
    KLFn() = default;

    static KLFn exp_decay(double M, double lambda, double cap = kDefaultCap);
    static KLFn scaled(ScalarFn f, double lambda);
    static KLFn tabulated(std::vector<double> s_grid, std::vector<double> t_grid,
                          std::vector<std::vector<double>> values,
                          const KLValidateOptions& opts = {});

    double eval(double s, double t) const;

    Family family() const { return family_; }
    double cap() const;
    ScalarFn section_zero() const;   ///< beta(., 0) as a tree (ExpDecay/Scaled only)
    double decay_rate_hint() const;  ///< lambda, or a grid-derived estimate

    KLFn with_cap(double cap) const;

    bool tail_below_tol() const { return tail_ok_; }

    const std::vector<double>& s_knots() const { return s_grid_; }
    const std::vector<double>& t_knots() const { return t_grid_; }
    const std::vector<std::vector<double>>& table() const { return values_; }

private:
    Family family_ = Family::ExpDecay;
    double M_ = 1, lambda_ = 1, cap_ = kDefaultCap;
    std::vector<ScalarFn> f_;  // Scaled: the s-section tree
    std::vector<double> s_grid_, t_grid_;
    std::vector<std::vector<double>> values_;  // values_[i][j] = beta(s_i, t_j)
    bool tail_ok_ = true;
};

/// Evaluate beta(s, t); domain-checked in s, clamped beyond the last t knot.
double kl_eval(const KLFn& beta, double s, double t);

}  // namespace smallgain
