#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "smallgain/kl_fn.hpp"
#include "smallgain/scalar_fn.hpp"
#include "smallgain/small_gain.hpp"

namespace smallgain {

/// Index convention for the second output's bound terms. Symmetric mirrors
/// the first output's construction (the coupled subsystem's multiplier and
/// transient appear inside); Literal keeps the same-index variant. The two
/// genuinely differ, and both are held to the same soundness checks against
/// simulation.
enum class FormulaMode { Literal, Symmetric };

const char* to_string(FormulaMode m);

/// One subsystem's stability data: the transient bound beta, the output and
/// input gains with offset d, and the boundedness-observability couple
/// (alpha0, D0).
struct SubsystemContract {
    KLFn beta;
    ScalarFn gamma_y;
    ScalarFn gamma_u;
    double d = 0;
    ScalarFn alpha0;
    double D0 = 0;
    int state_dim = 1;
    int input_dim = 1;
    int output_dim = 1;
};

/// The chosen multipliers and the condition offset they induce.
struct RhoPair {
    ScalarFn rho1;
    ScalarFn rho2;
    double d3 = 0;
};

/// Input-indexed bound evaluator
///   Delta_i = prefix( d3 + inner(gamma_u_other(|u_other|) + d_other)
///                        + gamma_u_own(|u_own|) + d_own ).
/// contents() exposes the pre-prefix value, which doubles as the constant
/// term of the output-envelope recursion.
struct InputBound {
    ScalarFn prefix;
    ScalarFn inner;
    ScalarFn gamma_u_own;
    ScalarFn gamma_u_other;
    double d_own = 0;
    double d_other = 0;
    double d3 = 0;

    double contents(double u_own_norm, double u_other_norm) const;
    double value(double u_own_norm, double u_other_norm) const;
    InputBound zero_offsets() const;
};

/// State-bound machinery: delta3, the Delta3 evaluator and s_inf.
struct StateBound {
    ScalarFn delta3;       ///< (a1+a2) . (2Id + 2 delta1 + 2 delta2)
    ScalarFn alpha0_sum;   ///< a1 + a2
    InputBound Delta1;     ///< indexed (u1, u2)
    InputBound Delta2;     ///< indexed (u2, u1)
    double D0_total = 0;

    double Delta3(double u1_norm, double u2_norm) const;
    double s_inf(double x0_norm, double u1_norm, double u2_norm) const;
    StateBound zero_offsets() const;
};

struct EnvelopeOptions {
    double eps = 1e-8;
    int k_max = 10000;
    int t_points = 256;
    double t_max_factor = 50.0;  ///< grid spans [0, t_max_factor / decay rate]
    std::optional<double> seed;  ///< starting constant level; default solves the t=0 fixed point
};

struct EnvelopeResult {
    std::vector<double> t;
    std::vector<double> env;       ///< the converged envelope E(t)
    std::vector<double> beta_hat;  ///< E(t) - E(inf)
    double asymptote = 0;          ///< E(inf), the offset fixed point
    int iterations = 0;
    double max_residual = 0;       ///< worst defect of the defining recursion
};

/// Iterate E_{k+1}(t) = B(t) + contraction(sup_{tau >= t/4} E_k(tau)) + C on
/// the time grid until the sup-norm change is below eps. The contraction must
/// satisfy contraction(s) < s for s > 0. Throws EnvelopeDivergence past k_max.
EnvelopeResult numeric_kl_envelope(const std::function<double(double)>& B_section,
                                   const ScalarFn& contraction, double C,
                                   std::span<const double> t_grid, const EnvelopeOptions& opts = {});

/// Convenience overload evaluating the KL bound's section at s_inf.
EnvelopeResult numeric_kl_envelope(const KLFn& B, const ScalarFn& contraction, double C,
                                   double s_inf, std::span<const double> t_grid,
                                   const EnvelopeOptions& opts = {});

/// Free parameters of the composition plus numeric knobs.
struct ComposerParams {
    ScalarFn rho3 = ScalarFn::identity(kComposeCap);
    ScalarFn r3_1 = ScalarFn::linear(0.1, kComposeCap);
    FormulaMode mode = FormulaMode::Symmetric;
    EnvelopeOptions envelope;
    int check_grid_n = 256;
};

/// Everything the small-gain construction needs, built once per mode.
struct CompositionWorkspace {
    RhoPair rho;
    ScalarFn rho3;
    ScalarFn r3_1;
    FormulaMode mode = FormulaMode::Symmetric;

    ScalarFn r1;
    ScalarFn r2;
    ScalarFn delta1;
    ScalarFn delta2;
    StateBound state;
    double d_tilde1 = 0;
    double d_tilde2 = 0;
    ScalarFn alpha;
    double alpha_check_slack = 0;  ///< min grid slack of the alpha inequality
    EnvelopeOptions envelope;

    // envelope building blocks, one per output
    ScalarFn env_inner1;     ///< gamma1 . (Id+rho2^-1) . (Id+rho3^-1)
    ScalarFn env_inner2;     ///< gamma2 . (Id+rho1^-1) . (Id+rho3^-1)
    ScalarFn contraction1;   ///< (Id+rho1)^-1
    ScalarFn contraction2;   ///< (Id+rho2)^-1
};

/// Composite gains r1, r2 from the stacked input to each output.
std::pair<ScalarFn, ScalarFn> compose_r_gains(const SubsystemContract& c1, const SubsystemContract& c2,
                                              const RhoPair& rho, const ScalarFn& rho3,
                                              FormulaMode mode);

struct OutputBounds {
    ScalarFn delta1;
    ScalarFn delta2;
    InputBound Delta1;
    InputBound Delta2;
};

/// Transient-free output bounds |y_i| <= delta_i(|x(0)|) + Delta_i.
OutputBounds compute_output_bounds(const SubsystemContract& c1, const SubsystemContract& c2,
                                   const RhoPair& rho, const ScalarFn& rho3, FormulaMode mode);

/// State bound |x(t)| <= delta3(|x(0)|) + Delta3 =: s_inf.
StateBound compute_state_bound(const SubsystemContract& c1, const SubsystemContract& c2,
                               const OutputBounds& ob);

/// Residual offsets of the input-gain split, zero when all offsets are zero.
std::pair<double, double> compute_tilde_d(const SubsystemContract& c1, const SubsystemContract& c2,
                                          const RhoPair& rho, const ScalarFn& rho3);

struct AlphaCheck {
    ScalarFn alpha;
    double min_slack = 0;
    double worst_s = 0;
};

/// The suggested alpha = (Id+delta1)^-1 . r3_1 . (Id + (2a1+2a2).(4Id+4r1+4r2))^-1,
/// grid-verified against delta1(alpha((2a1+2a2)((4Id+4r1+4r2)(s)))) <= r3_1(s).
AlphaCheck choose_alpha(const ScalarFn& r3_1, const ScalarFn& delta1, const ScalarFn& alpha0_1,
                        const ScalarFn& alpha0_2, const ScalarFn& r1, const ScalarFn& r2,
                        int check_grid_n = 256);

/// Run the full composition pipeline for one mode.
CompositionWorkspace build_workspace(const SubsystemContract& c1, const SubsystemContract& c2,
                                     const RhoPair& rho, const ComposerParams& params);

/// Ranges the certificate tabulation must cover.
struct SimCaps {
    double x0_max = 1;
    double u1_max = 0;
    double u2_max = 0;
    int s_points = 48;
};

/// The certified conclusion: per-output gains, tabulated transients, offsets.
struct Certificate {
    FormulaMode mode = FormulaMode::Symmetric;
    KLFn beta1p;
    KLFn beta2p;
    KLFn beta_hat1;  ///< envelope indexed by s_inf (diagnostics, sigma1)
    KLFn beta_hat2;
    ScalarFn r1, r2, r3_1, r3_2;
    ScalarFn gain_y1;     ///< r1 + r3_1
    ScalarFn gain_y2;     ///< r2 + r3_2
    ScalarFn gain_total;  ///< r1 + r2 + r3_1 + r3_2
    double d1p = 0;
    double d2p = 0;
    double d3 = 0;
    double d_tilde1 = 0;
    double d_tilde2 = 0;
    CompositionWorkspace workspace;

    bool ios() const { return d1p == 0.0 && d2p == 0.0; }

    /// Diagnostic evaluator sigma1(s, Delta, t) = min(beta_hat1(delta3(s)+Delta, t), delta1(s)).
    double sigma1(double s, double Delta, double t) const;
};

/// Tabulate beta'_i over (s, t), build r3_2 and the offsets d_i', and package
/// the per-output and total triples. Requires delta1 strictly increasing.
Certificate assemble_certificate(const SubsystemContract& c1, const SubsystemContract& c2,
                                 const CompositionWorkspace& ws, const SimCaps& caps);

}  // namespace smallgain
