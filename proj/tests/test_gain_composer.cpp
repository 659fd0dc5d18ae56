#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "smallgain/gain_composer.hpp"

using namespace smallgain;

namespace {

// the all-linear reference setup: gamma_u = Id, gamma_y = 0.5 Id,
// rho1 = rho2 = 0.5 Id, rho3 = Id, beta(s, 0) = s
SubsystemContract linear_contract(double gy = 0.5, double gu = 1.0, double d = 0.0,
                                  double a0 = 1.0, double D0 = 0.0) {
    SubsystemContract c;
    c.beta = KLFn::exp_decay(1.0, 1.0);
    c.gamma_y = ScalarFn::linear(gy);
    c.gamma_u = gu > 0 ? ScalarFn::linear(gu) : ScalarFn::zero();
    c.d = d;
    c.alpha0 = a0 > 0 ? ScalarFn::linear(a0) : ScalarFn::zero();
    c.D0 = D0;
    return c;
}

RhoPair rho_half(double d3 = 0.0) {
    return RhoPair{ScalarFn::linear(0.5, kComposeCap), ScalarFn::linear(0.5, kComposeCap), d3};
}

InputBound zero_bound() {
    return InputBound{ScalarFn::zero(), ScalarFn::zero(), ScalarFn::zero(), ScalarFn::zero(), 0, 0, 0};
}

}  // namespace

TEST_CASE("compose_r_gains: linear coefficient oracle") {
    SubsystemContract c1 = linear_contract(), c2 = linear_contract();
    ScalarFn rho3 = ScalarFn::identity(kComposeCap);

    SUBCASE("literal mode: inner multiplier is Id + rho2^-1 . (Id+rho3)^2 . gamma2u") {
        auto [r1, r2] = compose_r_gains(c1, c2, rho_half(), rho3, FormulaMode::Literal);
        // 3 * 4 * (1 + 0.5 * (1 + 2*4)) = 66
        CHECK(r1.eval(1.0) == doctest::Approx(66.0));
        CHECK(r1.linear_slope() == doctest::Approx(66.0));
        CHECK(r2.eval(1.0) == doctest::Approx(66.0));
    }
    SUBCASE("symmetric mode: inner multiplier is (Id+rho2^-1) . (Id+rho3)^2 . gamma2u") {
        auto [r1, r2] = compose_r_gains(c1, c2, rho_half(), rho3, FormulaMode::Symmetric);
        // 3 * 4 * (1 + 0.5 * 3*4) = 84
        CHECK(r1.linear_slope() == doctest::Approx(84.0));
        CHECK(r2.linear_slope() == doctest::Approx(84.0));
    }
    SUBCASE("zero input gains collapse r to the zero function") {
        SubsystemContract z1 = linear_contract(0.5, 0.0), z2 = linear_contract(0.5, 0.0);
        auto [r1, r2] = compose_r_gains(z1, z2, rho_half(), rho3, FormulaMode::Symmetric);
        CHECK(r1.is_zero());
        CHECK(r2.is_zero());
        CHECK(r1.eval(5.0) == 0.0);
    }
    SUBCASE("derived gains pass the class check") {
        auto [r1, r2] = compose_r_gains(c1, c2, rho_half(), rho3, FormulaMode::Symmetric);
        ClassReport rep = classify(r1);
        CHECK(rep.zero_at_zero);
        CHECK(rep.strictly_increasing);
        CHECK(is_class_k(r1.fn_class()));
        CHECK(is_class_k(r2.fn_class()));
    }
}

TEST_CASE("compute_output_bounds") {
    SubsystemContract c1 = linear_contract(), c2 = linear_contract();
    ScalarFn rho3 = ScalarFn::identity(kComposeCap);

    SUBCASE("delta: symbolic linear oracle 24 s") {
        OutputBounds ob = compute_output_bounds(c1, c2, rho_half(), rho3, FormulaMode::Symmetric);
        // (Id+rho1^-1)(Id+rho3^-1) = 3*2; inner 0.5 * 3*2 = 3 -> 6 * (1+3) s = 24 s
        CHECK(ob.delta1.linear_slope() == doctest::Approx(24.0));
        CHECK(ob.delta2.linear_slope() == doctest::Approx(24.0));
        CHECK(is_class_k(ob.delta1.fn_class()));
    }
    SUBCASE("Delta with zero inputs and offsets is zero") {
        OutputBounds ob = compute_output_bounds(c1, c2, rho_half(), rho3, FormulaMode::Symmetric);
        CHECK(ob.Delta1.value(0.0, 0.0) == 0.0);
        CHECK(ob.Delta2.value(0.0, 0.0) == 0.0);
    }
    SUBCASE("Delta picks up d3: direct evaluation oracle") {
        OutputBounds ob = compute_output_bounds(c1, c2, rho_half(0.5), rho3, FormulaMode::Symmetric);
        // prefix = (Id+rho1^-1)(Id+rho3) = 3*2; contents = d3 = 0.5
        CHECK(ob.Delta1.value(0.0, 0.0) == doctest::Approx(3.0));
    }
    SUBCASE("literal and symmetric differ only in the second subsystem") {
        SubsystemContract a1 = linear_contract(0.3), a2 = linear_contract(0.7);
        RhoPair mixed{ScalarFn::linear(0.25, kComposeCap), ScalarFn::linear(0.5, kComposeCap), 0.0};
        OutputBounds lit = compute_output_bounds(a1, a2, mixed, rho3, FormulaMode::Literal);
        OutputBounds sym = compute_output_bounds(a1, a2, mixed, rho3, FormulaMode::Symmetric);
        CHECK(lit.delta1.eval(1.0) == doctest::Approx(sym.delta1.eval(1.0)));
        CHECK(lit.delta2.eval(1.0) != doctest::Approx(sym.delta2.eval(1.0)));
        CHECK(lit.Delta1.value(1.0, 1.0) == doctest::Approx(sym.Delta1.value(1.0, 1.0)));
        CHECK(lit.Delta2.value(1.0, 1.0) != doctest::Approx(sym.Delta2.value(1.0, 1.0)));
    }
}

TEST_CASE("compute_state_bound") {
    SubsystemContract c1 = linear_contract(), c2 = linear_contract();

    SUBCASE("symbolic linear oracle: delta3 = 4s for identity alpha0 and zero deltas") {
        OutputBounds ob{ScalarFn::zero(), ScalarFn::zero(), zero_bound(), zero_bound()};
        StateBound sb = compute_state_bound(c1, c2, ob);
        CHECK(sb.delta3.linear_slope() == doctest::Approx(4.0));
        CHECK(sb.s_inf(1.0, 0.0, 0.0) == doctest::Approx(4.0));
        CHECK(sb.s_inf(0.0, 0.0, 0.0) == 0.0);
    }
    SUBCASE("constant observability offsets add up") {
        SubsystemContract d1 = linear_contract(0.5, 1.0, 0.0, 1.0, 1.0);
        SubsystemContract d2 = linear_contract(0.5, 1.0, 0.0, 1.0, 1.0);
        OutputBounds ob{ScalarFn::zero(), ScalarFn::zero(), zero_bound(), zero_bound()};
        StateBound sb = compute_state_bound(d1, d2, ob);
        CHECK(sb.Delta3(0.0, 0.0) == doctest::Approx(2.0));
    }
}

TEST_CASE("compute_tilde_d") {
    ScalarFn id = ScalarFn::identity(kComposeCap);
    RhoPair rho{id, id, 0.0};
    ScalarFn rho3 = id;

    SUBCASE("all offsets zero gives exactly zero") {
        SubsystemContract c1 = linear_contract(), c2 = linear_contract();
        auto [dt1, dt2] = compute_tilde_d(c1, c2, rho, rho3);
        CHECK(dt1 == 0.0);
        CHECK(dt2 == 0.0);
    }
    SUBCASE("direct evaluation oracle with d1 = 1") {
        // prefix (Id+rho^-1)(Id+rho3)(Id+rho3^-1) = 2*2*2 = 8 with every rho = Id
        SubsystemContract c1 = linear_contract(0.5, 1.0, 1.0), c2 = linear_contract();
        auto [dt1, dt2] = compute_tilde_d(c1, c2, rho, rho3);
        CHECK(dt1 == doctest::Approx(8.0));
        // dt2 = 8 * (0 + 0 + gamma2(8 * 1)) = 8 * 0.5 * 8 = 32
        CHECK(dt2 == doctest::Approx(32.0));
    }
    SUBCASE("direct evaluation oracle with both offsets") {
        SubsystemContract c1 = linear_contract(0.5, 1.0, 1.0), c2 = linear_contract(0.5, 1.0, 1.0);
        auto [dt1, dt2] = compute_tilde_d(c1, c2, rho, rho3);
        // 8 * (1 + 0.5 * 8) = 40
        CHECK(dt1 == doctest::Approx(40.0));
        CHECK(dt2 == doctest::Approx(40.0));
    }
}

TEST_CASE("choose_alpha") {
    SubsystemContract c1 = linear_contract(), c2 = linear_contract();
    ScalarFn rho3 = ScalarFn::identity(kComposeCap);
    auto [r1, r2] = compose_r_gains(c1, c2, rho_half(), rho3, FormulaMode::Symmetric);
    OutputBounds ob = compute_output_bounds(c1, c2, rho_half(), rho3, FormulaMode::Symmetric);

    SUBCASE("linear instance: closed-form slope and nonnegative slack") {
        AlphaCheck ac = choose_alpha(ScalarFn::identity(kComposeCap), ob.delta1, c1.alpha0,
                                     c2.alpha0, r1, r2);
        CHECK(ac.min_slack >= -1e-9);
        // alpha = (Id+delta1)^-1 . Id . H^-1 with delta1 = 24s, H = (1 + 4*(4+8*84))s
        double h_slope = 1.0 + 4.0 * (4.0 + 4.0 * (84.0 + 84.0));
        double expect = 1.0 / (25.0 * h_slope);
        CHECK(ac.alpha.eval(1.0) == doctest::Approx(expect).epsilon(1e-6));
    }
    SUBCASE("scaling r3_1 up scales alpha up pointwise") {
        AlphaCheck a1 = choose_alpha(ScalarFn::linear(0.1, kComposeCap), ob.delta1, c1.alpha0,
                                     c2.alpha0, r1, r2);
        AlphaCheck a10 = choose_alpha(ScalarFn::linear(1.0, kComposeCap), ob.delta1, c1.alpha0,
                                      c2.alpha0, r1, r2);
        for (double s : {0.5, 1.0, 4.0, 20.0}) {
            CHECK(a10.alpha.eval(s) >= a1.alpha.eval(s));
        }
    }
    SUBCASE("degenerate case collapses to (Id+delta1)^-1 . r3_1") {
        ScalarFn zero = ScalarFn::zero(kComposeCap);
        ScalarFn r31 = ScalarFn::linear(0.5, kComposeCap);
        AlphaCheck ac = choose_alpha(r31, ob.delta1, zero, zero, zero, zero);
        ScalarFn expect = compose(ScalarFn::inverse_of(id_plus(ob.delta1)), r31);
        for (double s : {0.0, 1.0, 3.0, 10.0}) {
            CHECK(ac.alpha.eval(s) == doctest::Approx(expect.eval(s)).epsilon(1e-9));
        }
    }
}

TEST_CASE("numeric_kl_envelope") {
    std::vector<double> tg = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};

    SUBCASE("scalar fixed-point oracle: x = (2/3) x + 1 -> 3") {
        auto res = numeric_kl_envelope([](double) { return 0.0; },
                                       ScalarFn::linear(2.0 / 3.0, kComposeCap), 1.0, tg);
        CHECK(res.asymptote == doctest::Approx(3.0).epsilon(1e-9));
        for (double v : res.env) CHECK(v == doctest::Approx(3.0).epsilon(1e-6));
        for (double v : res.beta_hat) CHECK(v == doctest::Approx(0.0));
        CHECK(res.max_residual <= 1e-8);
    }
    SUBCASE("no contraction, no offset: envelope equals the transient") {
        auto res = numeric_kl_envelope([](double t) { return std::exp(-t); }, ScalarFn::zero(), 0.0, tg);
        for (size_t k = 0; k < tg.size(); ++k) {
            CHECK(res.env[k] == doctest::Approx(std::exp(-tg[k])));
        }
        CHECK(res.asymptote == doctest::Approx(0.0));
    }
    SUBCASE("zero initial scale and offset gives the zero envelope") {
        auto res = numeric_kl_envelope(KLFn::exp_decay(1.0, 1.0), ScalarFn::linear(0.5, kComposeCap),
                                       0.0, 0.0, tg);
        for (double v : res.env) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("an expanding map is reported, not looped forever") {
        CHECK_THROWS_AS(numeric_kl_envelope([](double) { return 0.0; },
                                            ScalarFn::linear(1.5, kComposeCap), 1.0, tg),
                        EnvelopeDivergence);
    }
    SUBCASE("envelope is non-increasing and satisfies its recursion") {
        auto res = numeric_kl_envelope([](double t) { return 2.0 * std::exp(-0.3 * t); },
                                       ScalarFn::linear(0.6, kComposeCap), 0.7, tg);
        for (size_t k = 1; k < res.env.size(); ++k) CHECK(res.env[k] <= res.env[k - 1] + 1e-12);
        CHECK(res.max_residual <= 1e-8);
        CHECK(res.env.back() >= res.asymptote - 1e-12);
    }
}

TEST_CASE("assemble_certificate") {
    SubsystemContract c1 = linear_contract(), c2 = linear_contract();
    ComposerParams params;
    params.rho3 = ScalarFn::identity(kComposeCap);
    params.r3_1 = ScalarFn::linear(0.1, kComposeCap);
    SimCaps caps{2.0, 1.0, 1.0, 24};

    SUBCASE("IOS degeneration: zero offsets in, exactly zero offsets out, both modes") {
        for (FormulaMode mode : {FormulaMode::Symmetric, FormulaMode::Literal}) {
            params.mode = mode;
            CompositionWorkspace ws = build_workspace(c1, c2, rho_half(), params);
            Certificate cert = assemble_certificate(c1, c2, ws, caps);
            CHECK(cert.d1p == 0.0);
            CHECK(cert.d2p == 0.0);
            CHECK(cert.ios());
            CHECK(cert.d_tilde1 == 0.0);
        }
    }
    SUBCASE("all-linear certificate against the symbolic coefficient oracle") {
        params.mode = FormulaMode::Symmetric;
        RhoPair rho{ScalarFn::linear(0.25, kComposeCap), ScalarFn::linear(0.25, kComposeCap), 0.0};
        CompositionWorkspace ws = build_workspace(c1, c2, rho, params);
        Certificate cert = assemble_certificate(c1, c2, ws, caps);
        // (Id+rho^-1) = 5, (Id+rho3)^2 = 4: r = 5*4*(1 + 0.5*5*4) = 220
        CHECK(cert.r1.linear_slope() == doctest::Approx(220.0));
        CHECK(ws.delta1.linear_slope() == doctest::Approx(60.0));
        CHECK(ws.state.delta3.linear_slope() == doctest::Approx(484.0));
        CHECK(cert.gain_y1.eval(1.0) == doctest::Approx(220.1));
        // r3_2 = delta2 . delta1^-1 . r3_1 = 0.1 s when delta2 = delta1
        CHECK(cert.r3_2.eval(1.0) == doctest::Approx(0.1).epsilon(1e-6));
        CHECK(cert.gain_total.eval(1.0) == doctest::Approx(440.2).epsilon(1e-6));
    }
    SUBCASE("r3_1 = Id with equal deltas gives r3_2 = Id") {
        params.mode = FormulaMode::Symmetric;
        params.r3_1 = ScalarFn::identity(kComposeCap);
        CompositionWorkspace ws = build_workspace(c1, c2, rho_half(), params);
        Certificate cert = assemble_certificate(c1, c2, ws, caps);
        for (double s : {0.5, 1.0, 2.0}) {
            CHECK(cert.r3_2.eval(s) == doctest::Approx(s).epsilon(1e-6));
        }
    }
    SUBCASE("total gain is the pointwise sum of its parts") {
        params.mode = FormulaMode::Symmetric;
        CompositionWorkspace ws = build_workspace(c1, c2, rho_half(), params);
        Certificate cert = assemble_certificate(c1, c2, ws, caps);
        for (double s : {0.1, 1.0, 1.9}) {
            double parts = cert.r1.eval(s) + cert.r2.eval(s) + cert.r3_1.eval(s) + cert.r3_2.eval(s);
            CHECK(cert.gain_total.eval(s) == doctest::Approx(parts));
        }
    }
    SUBCASE("every derived gain passes the class check") {
        params.mode = FormulaMode::Symmetric;
        CompositionWorkspace ws = build_workspace(c1, c2, rho_half(), params);
        Certificate cert = assemble_certificate(c1, c2, ws, caps);
        for (const ScalarFn* f :
             {&cert.r1, &cert.r2, &cert.r3_2, &cert.gain_total, &ws.delta1, &ws.delta2,
              &ws.state.delta3, &ws.alpha}) {
            ClassReport rep = classify(*f, 128);
            CHECK(rep.zero_at_zero);
            CHECK(rep.strictly_increasing);
        }
    }
    SUBCASE("beta' tabulations behave like KL transients") {
        params.mode = FormulaMode::Symmetric;
        CompositionWorkspace ws = build_workspace(c1, c2, rho_half(), params);
        Certificate cert = assemble_certificate(c1, c2, ws, caps);
        CHECK(cert.beta1p.eval(0.0, 0.0) == 0.0);
        CHECK(cert.beta1p.eval(0.0, 5.0) == 0.0);
        double prev = cert.beta1p.eval(1.0, 0.0);
        CHECK(prev > 0.0);
        for (double t : {1.0, 5.0, 20.0, 45.0}) {
            double v = cert.beta1p.eval(1.0, t);
            CHECK(v <= prev + 1e-9);
            prev = v;
        }
        CHECK(cert.beta1p.eval(0.5, 1.0) <= cert.beta1p.eval(1.5, 1.0) + 1e-9);
    }
    SUBCASE("monotonicity: enlarging an input gain never shrinks the total gain") {
        params.mode = FormulaMode::Symmetric;
        CompositionWorkspace ws = build_workspace(c1, c2, rho_half(), params);
        Certificate cert = assemble_certificate(c1, c2, ws, caps);
        SubsystemContract big = linear_contract(0.5, 2.0);  // gamma_u doubled
        CompositionWorkspace ws2 = build_workspace(big, c2, rho_half(), params);
        Certificate cert2 = assemble_certificate(big, c2, ws2, caps);
        for (double s : {0.1, 0.7, 1.5}) {
            CHECK(cert2.gain_total.eval(s) >= cert.gain_total.eval(s) - 1e-12);
        }
    }
    SUBCASE("offsets flow through to d_prime") {
        params.mode = FormulaMode::Symmetric;
        SubsystemContract o1 = linear_contract(0.5, 1.0, 0.1), o2 = linear_contract(0.5, 1.0, 0.0);
        CompositionWorkspace ws = build_workspace(o1, o2, rho_half(0.05), params);
        Certificate cert = assemble_certificate(o1, o2, ws, caps);
        CHECK(cert.d1p > 0.0);
        CHECK(cert.d2p > 0.0);
        CHECK_FALSE(cert.ios());
        // d' dominates its d~ part
        CHECK(cert.d1p >= cert.d_tilde1);
    }
    SUBCASE("sigma1 split bound") {
        params.mode = FormulaMode::Symmetric;
        CompositionWorkspace ws = build_workspace(c1, c2, rho_half(), params);
        Certificate cert = assemble_certificate(c1, c2, ws, caps);
        oracles::FnGen gen(41);
        for (int i = 0; i < 30; ++i) {
            double s = gen.uniform(0.0, 2.0);
            double Delta = gen.uniform(0.0, 5.0);
            double t = gen.uniform(0.0, 10.0);
            double lhs = cert.sigma1(s, Delta, t);
            double rhs = cert.beta1p.eval(s, t) + ws.delta1.eval(ws.alpha.eval(Delta));
            CHECK(lhs <= rhs + 1e-6);
        }
    }
}
