#pragma once

#include <span>
#include <vector>

#include "smallgain/scalar_fn.hpp"

namespace smallgain {

enum class LoopOrder { Forward, Reverse };

/// A small-gain feasibility problem: the two output gains, the threshold s_l
/// above which the loop condition must hold, and the working range S_max.
struct SmallGainProblem {
    ScalarFn gamma1y;
    ScalarFn gamma2y;
    double s_l = 0;
    double s_max = kDefaultCap;
};

struct MarginPoint {
    double s;
    double slack_forward;
    double slack_reverse;
};

/// Grid evaluation of the loop condition for one multiplier pair.
struct MarginReport {
    bool feasible = false;
    double margin_abs = 0;   ///< min over the grid of s - composed(s)
    double margin_rel = 0;   ///< min over s > 0 of (s - composed(s)) / s
    double worst_s = 0;
    LoopOrder worst_order = LoopOrder::Forward;
    int grid_n = 0;
    double grid_hi = 0;      ///< top of the evaluated range (may sit below S_max
                             ///< when cap propagation shortens the composite)
    std::vector<MarginPoint> curve;
};

/// Feasibility witness: the multipliers, margins, and the condition offset d3.
struct SmallGainWitness {
    ScalarFn rho1;
    ScalarFn rho2;
    double c1 = 0;           ///< linear coefficients when the rho family is linear
    double c2 = 0;
    bool feasible = false;
    double margin_abs = 0;
    double margin_rel = 0;
    double d3 = 0;
    MarginReport report;
};

/// Forward: (Id+rho2) . gamma2 . (Id+rho1) . gamma1; Reverse swaps the roles.
ScalarFn loop_composition(const ScalarFn& gamma1, const ScalarFn& gamma2,
                          const ScalarFn& rho1, const ScalarFn& rho2, LoopOrder order);

/// Evaluate both composition orders on a log-spaced grid over
/// [max(s_l, 1e-9), S_max] plus the endpoint s_l itself. Never throws on
/// infeasibility; the report carries it. Margins are exact grid minima.
MarginReport check_condition(const SmallGainProblem& p, const ScalarFn& rho1, const ScalarFn& rho2,
                             int grid_n = 2048);

/// Scan rho_i = c_i * Id over the cartesian grid and return the witness with
/// the best worst-order relative margin; ties break to the lexicographically
/// smallest (c1, c2). The returned witness carries feasible = false when no
/// grid point satisfies both orders, with the best candidate's margin curve.
SmallGainWitness search_rho_linear(const SmallGainProblem& p, std::span<const double> c_grid,
                                   int grid_n = 2048);

/// The offset d3 induced by the threshold s_l:
///   d3 = max over both orders of sup_{s in [0, s_l]}
///        (gamma_j((Id+rho_i)(gamma_i(s))) - (Id+rho_j)^-1(s))_+
/// computed on a dense grid. Zero when s_l = 0. Requires a feasible pair.
double compute_d3(const SmallGainProblem& p, const ScalarFn& rho1, const ScalarFn& rho2,
                  int grid_n = 20000);

}  // namespace smallgain
