#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "smallgain/small_gain.hpp"

using namespace smallgain;

namespace {

SmallGainProblem half_gains(double s_l = 0.0) {
    return SmallGainProblem{ScalarFn::linear(0.5, 8e6), ScalarFn::linear(0.5, 8e6), s_l, 1e6};
}

SmallGainProblem saturating_example() {
    // gamma1 = s/2, gamma2 = 2s/(1+s), threshold s_l = 3
    return SmallGainProblem{ScalarFn::linear(0.5, 8e6), ScalarFn::saturation(2.0, 8e6), 3.0, 1e6};
}

}  // namespace

TEST_CASE("loop_composition") {
    ScalarFn half = ScalarFn::linear(0.5);
    ScalarFn rho_half = ScalarFn::linear(0.5);
    ScalarFn comp = loop_composition(half, half, rho_half, rho_half, LoopOrder::Forward);
    CHECK(comp.eval(1.0) == doctest::Approx(0.5625));  // (1.5 * 0.5)^2

    ScalarFn id = ScalarFn::identity();
    CHECK(loop_composition(id, id, id, id, LoopOrder::Forward).eval(1.0) == doctest::Approx(4.0));

    SUBCASE("saturating loop, forward order") {
        ScalarFn g1 = ScalarFn::linear(0.5), g2 = ScalarFn::saturation(2.0);
        ScalarFn f = loop_composition(g1, g2, id, id, LoopOrder::Forward);
        // gamma1(3) = 1.5 -> 3 -> gamma2(3) = 1.5 -> 3
        CHECK(f.eval(3.0) == doctest::Approx(3.0));
    }
}

TEST_CASE("check_condition") {
    SUBCASE("contractive linear loop is feasible with linear slack") {
        auto rep = check_condition(half_gains(), ScalarFn::linear(0.5, 8e6), ScalarFn::linear(0.5, 8e6));
        CHECK(rep.feasible);
        CHECK(rep.margin_abs >= 0.0);
        // slack(s) = (1 - 0.5625) s
        for (const auto& p : rep.curve) {
            CHECK(p.slack_forward == doctest::Approx(0.4375 * p.s).epsilon(1e-12));
        }
    }
    SUBCASE("unity loop with positive multipliers is infeasible") {
        SmallGainProblem p{ScalarFn::identity(8e6), ScalarFn::identity(8e6), 0.0, 1e6};
        auto rep = check_condition(p, ScalarFn::linear(0.1, 8e6), ScalarFn::linear(0.1, 8e6));
        CHECK_FALSE(rep.feasible);
        CHECK(rep.margin_abs < 0.0);
    }
    SUBCASE("saturating example becomes feasible above s_l = 3") {
        ScalarFn id1 = ScalarFn::linear(1.0, 8e6);
        auto rep = check_condition(saturating_example(), id1, id1);
        CHECK(rep.feasible);
        // 4s/(1+s) <= s exactly at s = 3
        CHECK(rep.margin_abs == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rep.worst_s == doctest::Approx(3.0));

        auto rep_below = check_condition(SmallGainProblem{saturating_example().gamma1y,
                                                          saturating_example().gamma2y, 2.0, 1e6},
                                         id1, id1);
        CHECK_FALSE(rep_below.feasible);
    }
}

TEST_CASE("search_rho_linear") {
    SUBCASE("agrees with an exhaustive oracle on the scan objective") {
        SmallGainProblem p = half_gains();
        double grid[] = {0.25, 0.5, 1.0};
        SmallGainWitness w = search_rho_linear(p, grid, 256);
        CHECK(w.feasible);

        // oracle: relative margin of a linear pair is 1 - 0.25 (1+c1)(1+c2)
        double best = -1e300, bc1 = 0, bc2 = 0;
        for (double c1 : grid) {
            for (double c2 : grid) {
                double m = 1.0 - 0.25 * (1 + c1) * (1 + c2);
                if (m > best + 1e-15) {
                    best = m;
                    bc1 = c1;
                    bc2 = c2;
                }
            }
        }
        CHECK(w.c1 == doctest::Approx(bc1));
        CHECK(w.c2 == doctest::Approx(bc2));
        CHECK(w.margin_rel == doctest::Approx(best).epsilon(1e-9));
    }
    SUBCASE("unity gains are infeasible for every grid") {
        SmallGainProblem p{ScalarFn::identity(8e6), ScalarFn::identity(8e6), 0.0, 1e6};
        double grid[] = {0.05, 0.1, 0.5, 1.0};
        SmallGainWitness w = search_rho_linear(p, grid, 256);
        CHECK_FALSE(w.feasible);
        CHECK_FALSE(w.report.curve.empty());  // margin curve still reported
    }
    SUBCASE("0.9 loop needs small multipliers") {
        // feasibility needs (1+c1)(1+c2) <= 1/0.9
        SmallGainProblem p{ScalarFn::linear(0.9, 8e6), ScalarFn::linear(1.0, 8e6), 0.0, 1e6};
        double coarse[] = {0.1, 0.5};
        CHECK_FALSE(search_rho_linear(p, coarse, 256).feasible);
        double fine[] = {0.05, 0.1, 0.5};
        SmallGainWitness w = search_rho_linear(p, fine, 256);
        CHECK(w.feasible);
        CHECK(w.c1 == doctest::Approx(0.05));
        CHECK(w.c2 == doctest::Approx(0.05));
    }
    SUBCASE("monotone dominance: shrinking a feasible pair stays feasible") {
        SmallGainProblem p = half_gains();
        auto rep = check_condition(p, ScalarFn::linear(1.0, 8e6), ScalarFn::linear(1.0, 8e6), 256);
        CHECK(rep.feasible);
        for (double c : {0.5, 0.25, 0.1}) {
            auto smaller = check_condition(p, ScalarFn::linear(c, 8e6), ScalarFn::linear(c, 8e6), 256);
            CHECK(smaller.feasible);
        }
    }
}

TEST_CASE("compute_d3") {
    SUBCASE("zero threshold gives exactly zero") {
        SmallGainProblem p = half_gains();
        ScalarFn r1 = ScalarFn::linear(0.5, 8e6), r2 = ScalarFn::linear(0.5, 8e6);
        CHECK(compute_d3(p, r1, r2) == 0.0);
        // and the deficit is nonpositive across the whole range
        ScalarFn ip1 = id_plus(r1), ip2 = id_plus(r2);
        ScalarFn lhs = compose(p.gamma2y, compose(ip1, p.gamma1y));
        for (int i = 0; i <= 200; ++i) {
            double s = p.s_max * i / 200.0;
            CHECK(lhs.eval_unchecked(s) <= invert(ip2, s) + 1e-9);
        }
    }
    SUBCASE("saturating example: dense-grid oracle value 0.5") {
        SmallGainProblem p = saturating_example();
        ScalarFn id1 = ScalarFn::linear(1.0, 8e6);
        double d3 = compute_d3(p, id1, id1);
        // oracle: max over [0, 3] of 2s/(1+s) - s/2, peak at s = 1
        double expect = oracles::grid_max([](double s) { return 2 * s / (1 + s) - 0.5 * s; }, 0.0,
                                          3.0, 30000);
        CHECK(d3 == doctest::Approx(expect).epsilon(1e-6));
        CHECK(d3 == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("soundness: the offset closes the deficit everywhere") {
        SmallGainProblem p = saturating_example();
        ScalarFn id1 = ScalarFn::linear(1.0, 8e6);
        double d3 = compute_d3(p, id1, id1);
        ScalarFn ip1 = id_plus(id1), ip2 = id_plus(id1);
        ScalarFn lhs1 = compose(p.gamma2y, compose(ip1, p.gamma1y));
        ScalarFn lhs2 = compose(p.gamma1y, compose(ip2, p.gamma2y));
        for (int i = 0; i <= 10000; ++i) {
            double s = p.s_max * double(i) / 10000.0;
            CHECK(lhs1.eval_unchecked(s) <= invert(ip2, s) + d3 + 1e-6);
            CHECK(lhs2.eval_unchecked(s) <= invert(ip1, s) + d3 + 1e-6);
        }
    }
    SUBCASE("requires feasibility") {
        SmallGainProblem p{ScalarFn::identity(8e6), ScalarFn::identity(8e6), 1.0, 1e6};
        CHECK_THROWS_AS(compute_d3(p, ScalarFn::linear(0.5, 8e6), ScalarFn::linear(0.5, 8e6)),
                        InfeasiblePrecondition);
    }
}

TEST_CASE("linear feasibility oracle on a parameter sweep") {
    // grid feasibility must match (1+c1)(1+c2) k1 k2 <= 1 exactly; parameter
    // values are chosen so boundary products are representable, keeping the
    // closed form and the grid evaluation on the same side of 1
    for (double k1 : {0.2, 0.5, 0.75}) {
        for (double k2 : {0.4, 0.5, 1.0}) {
            for (double c1 : {0.25, 1.0}) {
                for (double c2 : {0.5, 1.0}) {
                    SmallGainProblem p{ScalarFn::linear(k1, 8e6), ScalarFn::linear(k2, 8e6), 0.0, 1e6};
                    auto rep = check_condition(p, ScalarFn::linear(c1, 8e6),
                                               ScalarFn::linear(c2, 8e6), 256);
                    bool closed_form = (1 + c1) * (1 + c2) * k1 * k2 <= 1.0;
                    CHECK(rep.feasible == closed_form);
                }
            }
        }
    }
}
