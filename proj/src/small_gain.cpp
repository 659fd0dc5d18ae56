#include "smallgain/small_gain.hpp"

#include <algorithm>
#include <cmath>

namespace smallgain {

ScalarFn loop_composition(const ScalarFn& gamma1, const ScalarFn& gamma2,
                          const ScalarFn& rho1, const ScalarFn& rho2, LoopOrder order) {
    const ScalarFn& gi = order == LoopOrder::Forward ? gamma1 : gamma2;
    const ScalarFn& gj = order == LoopOrder::Forward ? gamma2 : gamma1;
    const ScalarFn& ri = order == LoopOrder::Forward ? rho1 : rho2;
    const ScalarFn& rj = order == LoopOrder::Forward ? rho2 : rho1;
    return compose(id_plus(rj), compose(gj, compose(id_plus(ri), gi)));
}

namespace {

// log-spaced condition grid over [max(s_l, 1e-9), hi] plus s_l itself
std::vector<double> condition_grid(double s_l, double hi, int n) {
    std::vector<double> g;
    g.reserve(static_cast<size_t>(n) + 1);
    g.push_back(s_l);
    double lo = std::max(s_l, 1e-9);
    if (hi > lo) {
        for (int i = 0; i < n; ++i) {
            g.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
        }
    }
    return g;
}

}  // namespace

MarginReport check_condition(const SmallGainProblem& p, const ScalarFn& rho1, const ScalarFn& rho2,
                             int grid_n) {
    ScalarFn fwd = loop_composition(p.gamma1y, p.gamma2y, rho1, rho2, LoopOrder::Forward);
    ScalarFn rev = loop_composition(p.gamma1y, p.gamma2y, rho1, rho2, LoopOrder::Reverse);

    MarginReport rep;
    rep.grid_n = grid_n;
    rep.grid_hi = std::min({p.s_max, fwd.cap(), rev.cap()});

    std::vector<double> grid = condition_grid(p.s_l, rep.grid_hi, grid_n);
    rep.curve.reserve(grid.size());

    bool first_abs = true, first_rel = true;
    for (double s : grid) {
        double sf = s - fwd.eval_unchecked(s);
        double sr = s - rev.eval_unchecked(s);
        rep.curve.push_back({s, sf, sr});

        double worst = std::min(sf, sr);
        if (first_abs || worst < rep.margin_abs) {
            rep.margin_abs = worst;
            rep.worst_s = s;
            rep.worst_order = sf <= sr ? LoopOrder::Forward : LoopOrder::Reverse;
            first_abs = false;
        }
        if (s > 0) {
            double rel = worst / s;
            if (first_rel || rel < rep.margin_rel) {
                rep.margin_rel = rel;
                first_rel = false;
            }
        }
    }
    rep.feasible = rep.margin_abs >= 0.0;
    return rep;
}

SmallGainWitness search_rho_linear(const SmallGainProblem& p, std::span<const double> c_grid,
                                   int grid_n) {
    if (c_grid.empty()) throw InfeasiblePrecondition("search_rho_linear requires a non-empty coefficient grid");

    SmallGainWitness best;
    bool have = false;
    for (double c1 : c_grid) {
        for (double c2 : c_grid) {
            ScalarFn r1 = ScalarFn::linear(c1, p.s_max * 8);
            ScalarFn r2 = ScalarFn::linear(c2, p.s_max * 8);
            MarginReport rep = check_condition(p, r1, r2, grid_n);
            // maximize the worst-order relative margin; first (lex-smallest) wins ties
            if (!have || rep.margin_rel > best.margin_rel) {
                best.rho1 = r1;
                best.rho2 = r2;
                best.c1 = c1;
                best.c2 = c2;
                best.feasible = rep.feasible;
                best.margin_abs = rep.margin_abs;
                best.margin_rel = rep.margin_rel;
                best.report = std::move(rep);
                have = true;
            }
        }
    }
    if (best.feasible) {
        best.d3 = compute_d3(p, best.rho1, best.rho2);
    }
    return best;
}

double compute_d3(const SmallGainProblem& p, const ScalarFn& rho1, const ScalarFn& rho2,
                  int grid_n) {
    MarginReport rep = check_condition(p, rho1, rho2, 256);
    if (!rep.feasible) {
        throw InfeasiblePrecondition("compute_d3 requires a feasible multiplier pair");
    }
    if (p.s_l == 0.0) return 0.0;

    ScalarFn ip1 = id_plus(rho1), ip2 = id_plus(rho2);
    // order 1: gamma2((Id+rho1)(gamma1(s))) vs (Id+rho2)^-1(s)
    ScalarFn lhs1 = compose(p.gamma2y, compose(ip1, p.gamma1y));
    ScalarFn lhs2 = compose(p.gamma1y, compose(ip2, p.gamma2y));

    double d3 = 0.0;
    for (int i = 0; i <= grid_n; ++i) {
        double s = p.s_l * double(i) / grid_n;
        double deficit1 = lhs1.eval_unchecked(s) - invert(ip2, s);
        double deficit2 = lhs2.eval_unchecked(s) - invert(ip1, s);
        d3 = std::max({d3, deficit1, deficit2});
    }
    return d3;
}

}  // namespace smallgain
