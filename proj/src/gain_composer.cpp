#include "smallgain/gain_composer.hpp"

#include <algorithm>
#include <cmath>

namespace smallgain {

const char* to_string(FormulaMode m) {
    return m == FormulaMode::Literal ? "literal" : "symmetric";
}

double InputBound::contents(double u_own_norm, double u_other_norm) const {
    double v_own = gamma_u_own.eval(u_own_norm);
    double v_other = gamma_u_other.eval(u_other_norm);
    return d3 + inner.eval(v_other + d_other) + v_own + d_own;
}

double InputBound::value(double u_own_norm, double u_other_norm) const {
    return prefix.eval(contents(u_own_norm, u_other_norm));
}

InputBound InputBound::zero_offsets() const {
    InputBound b = *this;
    b.d_own = b.d_other = b.d3 = 0;
    return b;
}

double StateBound::Delta3(double u1_norm, double u2_norm) const {
    double u = std::max(u1_norm, u2_norm);  // max-norm of the stacked input
    double d1 = Delta1.value(u1_norm, u2_norm);
    double d2 = Delta2.value(u2_norm, u1_norm);
    return alpha0_sum.eval(2 * u + 2 * d1 + 2 * d2) + D0_total;
}

double StateBound::s_inf(double x0_norm, double u1_norm, double u2_norm) const {
    return delta3.eval(x0_norm) + Delta3(u1_norm, u2_norm);
}

StateBound StateBound::zero_offsets() const {
    StateBound b = *this;
    b.Delta1 = Delta1.zero_offsets();
    b.Delta2 = Delta2.zero_offsets();
    b.D0_total = 0;
    return b;
}

std::pair<ScalarFn, ScalarFn> compose_r_gains(const SubsystemContract& c1, const SubsystemContract& c2,
                                              const RhoPair& rho, const ScalarFn& rho3,
                                              FormulaMode mode) {
    ScalarFn ipr1i = id_plus(ScalarFn::inverse_of(rho.rho1));
    ScalarFn ipr2i = id_plus(ScalarFn::inverse_of(rho.rho2));
    ScalarFn p3 = id_plus(rho3);
    ScalarFn p3sq = compose(p3, p3);

    auto make_r = [&](const SubsystemContract& own, const SubsystemContract& other,
                      const ScalarFn& ipr_own_i, const ScalarFn& rho_other,
                      const ScalarFn& ipr_other_i) {
        ScalarFn inner = mode == FormulaMode::Literal
                             ? id_plus(compose(ScalarFn::inverse_of(rho_other),
                                               compose(p3sq, other.gamma_u)))
                             : compose(ipr_other_i, compose(p3sq, other.gamma_u));
        ScalarFn bracket = sum(own.gamma_u, compose(own.gamma_y, inner));
        return compose(ipr_own_i, compose(p3sq, bracket));
    };

    ScalarFn r1 = make_r(c1, c2, ipr1i, rho.rho2, ipr2i);
    ScalarFn r2 = make_r(c2, c1, ipr2i, rho.rho1, ipr1i);
    return {r1, r2};
}

OutputBounds compute_output_bounds(const SubsystemContract& c1, const SubsystemContract& c2,
                                   const RhoPair& rho, const ScalarFn& rho3, FormulaMode mode) {
    ScalarFn ipr1i = id_plus(ScalarFn::inverse_of(rho.rho1));
    ScalarFn ipr2i = id_plus(ScalarFn::inverse_of(rho.rho2));
    ScalarFn p3 = id_plus(rho3);
    ScalarFn p3inv = id_plus(ScalarFn::inverse_of(rho3));

    ScalarFn beta1_0 = c1.beta.section_zero().with_cap(kComposeCap);
    ScalarFn beta2_0 = c2.beta.section_zero().with_cap(kComposeCap);

    ScalarFn P1p = compose(ipr1i, p3inv);
    ScalarFn P2p = compose(ipr2i, p3inv);

    // delta1 uses the other subsystem's data inside; the printed delta2
    // repeats its own (Literal), symmetry dictates the swap (Symmetric).
    ScalarFn delta1 = compose(P1p, sum(beta1_0, compose(c1.gamma_y, compose(P2p, beta2_0))));
    ScalarFn delta2 =
        mode == FormulaMode::Literal
            ? compose(P2p, sum(beta2_0, compose(c2.gamma_y, compose(P2p, beta2_0))))
            : compose(P2p, sum(beta2_0, compose(c2.gamma_y, compose(P1p, beta1_0))));

    ScalarFn prefix1 = compose(ipr1i, p3);
    ScalarFn prefix2 = compose(ipr2i, p3);
    ScalarFn inner1 = compose(c1.gamma_y, compose(ipr2i, p3));
    ScalarFn inner2 = mode == FormulaMode::Literal ? compose(c2.gamma_y, compose(ipr2i, p3))
                                                   : compose(c2.gamma_y, compose(ipr1i, p3));

    OutputBounds ob{delta1, delta2,
                    InputBound{prefix1, inner1, c1.gamma_u, c2.gamma_u, c1.d, c2.d, rho.d3},
                    InputBound{prefix2, inner2, c2.gamma_u, c1.gamma_u, c2.d, c1.d, rho.d3}};
    return ob;
}

StateBound compute_state_bound(const SubsystemContract& c1, const SubsystemContract& c2,
                               const OutputBounds& ob) {
    ScalarFn alpha0_sum = sum(c1.alpha0, c2.alpha0);
    ScalarFn arg = sum(ScalarFn::linear(2, kComposeCap), scaled(2, sum(ob.delta1, ob.delta2)));
    ScalarFn delta3 = compose(alpha0_sum, arg);
    return StateBound{delta3, alpha0_sum, ob.Delta1, ob.Delta2, c1.D0 + c2.D0};
}

std::pair<double, double> compute_tilde_d(const SubsystemContract& c1, const SubsystemContract& c2,
                                          const RhoPair& rho, const ScalarFn& rho3) {
    ScalarFn p3 = id_plus(rho3);
    ScalarFn p3inv = id_plus(ScalarFn::inverse_of(rho3));
    ScalarFn w = compose(p3, p3inv);
    ScalarFn A1 = compose(id_plus(ScalarFn::inverse_of(rho.rho1)), w);
    ScalarFn A2 = compose(id_plus(ScalarFn::inverse_of(rho.rho2)), w);

    double dt1 = A1.eval(c1.d + rho.d3 + c1.gamma_y.eval(A2.eval(c2.d)));
    double dt2 = A2.eval(c2.d + rho.d3 + c2.gamma_y.eval(A1.eval(c1.d)));
    return {dt1, dt2};
}

AlphaCheck choose_alpha(const ScalarFn& r3_1, const ScalarFn& delta1, const ScalarFn& alpha0_1,
                        const ScalarFn& alpha0_2, const ScalarFn& r1, const ScalarFn& r2,
                        int check_grid_n) {
    ScalarFn two_alpha = scaled(2, sum(alpha0_1, alpha0_2));
    ScalarFn four_term = sum(ScalarFn::linear(4, kComposeCap), scaled(4, sum(r1, r2)));
    ScalarFn G = compose(two_alpha, four_term);
    ScalarFn H = id_plus(G);
    ScalarFn alpha =
        compose(ScalarFn::inverse_of(id_plus(delta1)), compose(r3_1, ScalarFn::inverse_of(H)));

    // grid check of delta1(alpha(G(s))) <= r3_1(s)
    ScalarFn chk = compose(delta1, compose(alpha, G));
    double s_hi = std::min(chk.cap(), r3_1.cap());
    AlphaCheck out{alpha, 0, 0};
    bool first = true;
    for (int i = 0; i <= check_grid_n; ++i) {
        double s = s_hi * double(i) / check_grid_n;
        double slack = r3_1.eval(s) - chk.eval(s);
        if (first || slack < out.min_slack) {
            out.min_slack = slack;
            out.worst_s = s;
            first = false;
        }
    }
    if (out.min_slack < -1e-6 * std::max(1.0, std::abs(r3_1.eval(s_hi)))) {
        throw Error("alpha inequality violated on the grid at s = " + std::to_string(out.worst_s) +
                    " (slack " + std::to_string(out.min_slack) + "); enlarge caps or loosen tolerances");
    }
    return out;
}

CompositionWorkspace build_workspace(const SubsystemContract& c1_in, const SubsystemContract& c2_in,
                                     const RhoPair& rho_in, const ComposerParams& params) {
    // re-cap everything so composite trees keep headroom above scenario scales
    auto recap = [](const SubsystemContract& c) {
        SubsystemContract r = c;
        r.beta = c.beta.with_cap(kComposeCap);
        r.gamma_y = c.gamma_y.with_cap(kComposeCap);
        r.gamma_u = c.gamma_u.with_cap(kComposeCap);
        r.alpha0 = c.alpha0.with_cap(kComposeCap);
        return r;
    };
    SubsystemContract c1 = recap(c1_in), c2 = recap(c2_in);
    RhoPair rho{rho_in.rho1.with_cap(kComposeCap), rho_in.rho2.with_cap(kComposeCap), rho_in.d3};
    ScalarFn rho3 = params.rho3.with_cap(kComposeCap);
    ScalarFn r3_1 = params.r3_1.with_cap(kComposeCap);

    CompositionWorkspace ws;
    ws.rho = rho;
    ws.rho3 = rho3;
    ws.r3_1 = r3_1;
    ws.mode = params.mode;
    ws.envelope = params.envelope;

    auto [r1, r2] = compose_r_gains(c1, c2, rho, rho3, params.mode);
    ws.r1 = r1;
    ws.r2 = r2;

    OutputBounds ob = compute_output_bounds(c1, c2, rho, rho3, params.mode);
    ws.delta1 = ob.delta1;
    ws.delta2 = ob.delta2;
    ws.state = compute_state_bound(c1, c2, ob);

    auto [dt1, dt2] = compute_tilde_d(c1, c2, rho, rho3);
    ws.d_tilde1 = dt1;
    ws.d_tilde2 = dt2;

    AlphaCheck ac = choose_alpha(r3_1, ob.delta1, c1.alpha0, c2.alpha0, r1, r2, params.check_grid_n);
    ws.alpha = ac.alpha;
    ws.alpha_check_slack = ac.min_slack;

    ScalarFn p3inv = id_plus(ScalarFn::inverse_of(rho3));
    ScalarFn ipr1i = id_plus(ScalarFn::inverse_of(rho.rho1));
    ScalarFn ipr2i = id_plus(ScalarFn::inverse_of(rho.rho2));
    ws.env_inner1 = compose(c1.gamma_y, compose(ipr2i, p3inv));
    ws.env_inner2 = compose(c2.gamma_y, compose(ipr1i, p3inv));
    ws.contraction1 = ScalarFn::inverse_of(id_plus(rho.rho1));
    ws.contraction2 = ScalarFn::inverse_of(id_plus(rho.rho2));
    return ws;
}

namespace {

// scalar fixed point of x = g(x) + C from below; g must contract
double fixed_level(const ScalarFn& g, double add, int k_max) {
    double x = 0;
    for (int i = 0; i < k_max; ++i) {
        double nx = g.eval_unchecked(x) + add;
        if (std::abs(nx - x) <= 1e-14 * std::max(1.0, x)) return nx;
        if (!std::isfinite(nx) || nx > 1e300) break;
        x = nx;
    }
    throw EnvelopeDivergence("scalar fixed-point iteration did not converge; the contraction is invalid");
}

}  // namespace

EnvelopeResult numeric_kl_envelope(const std::function<double(double)>& B_section,
                                   const ScalarFn& contraction, double C,
                                   std::span<const double> t_grid, const EnvelopeOptions& opts) {
    size_t n = t_grid.size();
    if (n < 2 || t_grid[0] != 0.0) throw Error("envelope t grid must start at 0 with at least 2 knots");

    std::vector<double> Bv(n);
    for (size_t k = 0; k < n; ++k) Bv[k] = B_section(t_grid[k]);

    EnvelopeResult res;
    res.t.assign(t_grid.begin(), t_grid.end());
    res.asymptote = fixed_level(contraction, C, opts.k_max);
    double seed = opts.seed ? *opts.seed : fixed_level(contraction, Bv[0] + C, opts.k_max);

    std::vector<double> E(n, seed), En(n), M(n);
    auto tail_sup = [&](double tq) {
        if (tq >= res.t.back()) return E.back();
        auto it = std::upper_bound(res.t.begin(), res.t.end(), tq);
        size_t hi = static_cast<size_t>(it - res.t.begin());
        size_t lo = hi - 1;
        double u = (tq - res.t[lo]) / (res.t[hi] - res.t[lo]);
        double at = E[lo] + u * (E[hi] - E[lo]);
        return std::max(at, M[hi]);
    };

    bool converged = false;
    for (int iter = 0; iter < opts.k_max; ++iter) {
        M[n - 1] = E[n - 1];
        for (size_t k = n - 1; k-- > 0;) M[k] = std::max(E[k], M[k + 1]);
        double change = 0;
        for (size_t k = 0; k < n; ++k) {
            En[k] = Bv[k] + contraction.eval_unchecked(tail_sup(res.t[k] * 0.25)) + C;
            change = std::max(change, std::abs(En[k] - E[k]));
        }
        E.swap(En);
        res.iterations = iter + 1;
        if (change <= opts.eps) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw EnvelopeDivergence("envelope iteration did not converge in " +
                                 std::to_string(opts.k_max) + " steps");
    }

    M[n - 1] = E[n - 1];
    for (size_t k = n - 1; k-- > 0;) M[k] = std::max(E[k], M[k + 1]);
    for (size_t k = 0; k < n; ++k) {
        double defect = std::abs(Bv[k] + contraction.eval_unchecked(tail_sup(res.t[k] * 0.25)) + C - E[k]);
        res.max_residual = std::max(res.max_residual, defect);
    }

    res.env = E;
    res.beta_hat.resize(n);
    for (size_t k = 0; k < n; ++k) res.beta_hat[k] = std::max(0.0, E[k] - res.asymptote);
    return res;
}

EnvelopeResult numeric_kl_envelope(const KLFn& B, const ScalarFn& contraction, double C,
                                   double s_inf, std::span<const double> t_grid,
                                   const EnvelopeOptions& opts) {
    return numeric_kl_envelope([&](double t) { return B.eval(s_inf, t); }, contraction, C, t_grid,
                               opts);
}

namespace {

std::vector<double> envelope_t_grid(double t_max, int points) {
    std::vector<double> g;
    g.reserve(points);
    g.push_back(0.0);
    double lo = t_max * 1e-4;
    for (int i = 0; i < points - 1; ++i) {
        g.push_back(lo * std::pow(t_max / lo, double(i) / (points - 2)));
    }
    return g;
}

}  // namespace

double Certificate::sigma1(double s, double Delta, double t) const {
    double sigma = workspace.state.delta3.eval(s) + Delta;
    double bh = beta_hat1.eval(sigma, t);
    ScalarFn m = fn_min(workspace.delta1, ScalarFn::constant(bh, workspace.delta1.cap()));
    return m.eval(s);
}

Certificate assemble_certificate(const SubsystemContract& c1, const SubsystemContract& c2,
                                 const CompositionWorkspace& ws, const SimCaps& caps) {
    if (!ws.delta1.strictly_increasing()) {
        throw NotStrictlyIncreasing("certificate refused: delta1 is not invertible on its cap");
    }

    Certificate cert;
    cert.mode = ws.mode;
    cert.workspace = ws;
    cert.r1 = ws.r1;
    cert.r2 = ws.r2;
    cert.r3_1 = ws.r3_1;
    cert.r3_2 = compose(ws.delta2, compose(ScalarFn::numeric_inverse(ws.delta1), ws.r3_1));
    cert.gain_y1 = sum(ws.r1, ws.r3_1);
    cert.gain_y2 = sum(ws.r2, cert.r3_2);
    cert.gain_total = sum(cert.gain_y1, cert.gain_y2);
    cert.d3 = ws.rho.d3;
    cert.d_tilde1 = ws.d_tilde1;
    cert.d_tilde2 = ws.d_tilde2;

    // d_i' = d~_i + delta_i(alpha((2a1+2a2)(4 d~_1 + 4 d~_2) + 2 D1 + 2 D2))
    double z = 2 * ws.state.alpha0_sum.eval(4 * ws.d_tilde1 + 4 * ws.d_tilde2) + 2 * ws.state.D0_total;
    double az = ws.alpha.eval(z);
    cert.d1p = ws.d_tilde1 + ws.delta1.eval(az);
    cert.d2p = ws.d_tilde2 + ws.delta2.eval(az);

    // beta'_i(s, t) = beta_hat_i(delta3(s) + alpha^-1(s), t), tabulated
    double lambda = std::min(c1.beta.decay_rate_hint(), c2.beta.decay_rate_hint());
    std::vector<double> t_grid = envelope_t_grid(ws.envelope.t_max_factor / lambda, ws.envelope.t_points);

    int ns = std::max(caps.s_points, 8);
    double s_hi = std::max(caps.x0_max * 1.25, 1.0);
    std::vector<double> s_grid(ns);
    for (int i = 0; i < ns; ++i) s_grid[i] = s_hi * double(i) / (ns - 1);

    KLFn beta1 = c1.beta.with_cap(kComposeCap);
    KLFn beta2 = c2.beta.with_cap(kComposeCap);
    double C1 = ws.state.Delta1.contents(caps.u1_max, caps.u2_max);
    double C2 = ws.state.Delta2.contents(caps.u2_max, caps.u1_max);

    std::vector<double> sinf_vals(ns);
    std::vector<std::vector<double>> rows1(ns), rows2(ns);
    for (int i = 0; i < ns; ++i) {
        double s = s_grid[i];
        double sinf = ws.state.delta3.eval(s) + invert(ws.alpha, s);
        sinf_vals[i] = sinf;
        auto B1 = [&](double t) {
            return beta1.eval(sinf, t * 0.5) + ws.env_inner1.eval(beta2.eval(sinf, t * 0.25));
        };
        auto B2 = [&](double t) {
            return beta2.eval(sinf, t * 0.5) + ws.env_inner2.eval(beta1.eval(sinf, t * 0.25));
        };
        rows1[i] = numeric_kl_envelope(B1, ws.contraction1, C1, t_grid, ws.envelope).beta_hat;
        rows2[i] = numeric_kl_envelope(B2, ws.contraction2, C2, t_grid, ws.envelope).beta_hat;
    }

    KLValidateOptions vopts;
    vopts.require_tail = false;  // envelope tails thin out polynomially, not exponentially
    cert.beta1p = KLFn::tabulated(s_grid, t_grid, rows1, vopts);
    cert.beta2p = KLFn::tabulated(s_grid, t_grid, rows2, vopts);
    if (sinf_vals.back() > 0) {
        cert.beta_hat1 = KLFn::tabulated(sinf_vals, t_grid, rows1, vopts);
        cert.beta_hat2 = KLFn::tabulated(sinf_vals, t_grid, rows2, vopts);
    }
    return cert;
}

}  // namespace smallgain
