#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smallgain/errors.hpp"

namespace smallgain {

inline constexpr double kEpsLoop = 1e-10;
inline constexpr int kLoopMaxIter = 100;
inline constexpr double kEscapeThreshold = 1e9;
inline constexpr double kEpsVerify = 1e-6;

struct Dims {
    int state = 1;
    int input = 1;
    int output = 1;
};

/// One subsystem of the interconnection:
///   xdot_i = f(x_i, y_other, u_i),  y_i = h(x_i, y_other, u_i).
/// feedthrough marks h as depending on y_other, which makes the output pair
/// an algebraic loop.
struct SubsystemDynamics {
    Dims dims;
    int y_other_dim = 1;  ///< width of the coupled output this subsystem reads
    bool feedthrough = false;
    std::function<void(std::span<const double> x, std::span<const double> y_other,
                       std::span<const double> u, std::span<double> out)>
        f;
    std::function<void(std::span<const double> x, std::span<const double> y_other,
                       std::span<const double> u, std::span<double> out)>
        h;
};

/// Scalar input channel with a closed-form essential supremum.
struct InputSignal {
    enum class Kind { Constant, Step, Sinusoid, PiecewiseConstant };

    Kind kind = Kind::Constant;
    double amplitude = 0;
    double t0 = 0;      ///< Step: switch-on time
    double omega = 0;   ///< Sinusoid: angular frequency
    std::vector<std::pair<double, double>> table;  ///< PiecewiseConstant: (t_k, value)

    double eval(double t) const;
    double sup_norm(double T) const;  ///< exact ess-sup of |u| over [0, T]

    static InputSignal constant(double a);
    static InputSignal step(double t0, double a);
    static InputSignal sinusoid(double a, double omega);
    static InputSignal piecewise(std::vector<std::pair<double, double>> table);
};

struct Diagnosis {
    bool finite_escape = false;
    double escape_time = 0;
    bool loop_failure = false;
    double loop_failure_time = 0;

    bool clean() const { return !finite_escape && !loop_failure; }
};

/// Uniform-grid samples of one interconnected run plus running truncated
/// sup-norms (max-norm over components, max over samples so far).
struct TrajectoryRecord {
    double dt = 0;
    double T = 0;
    int n1 = 0, n2 = 0;  ///< state dims of the two subsystems
    std::vector<double> t;
    std::vector<std::vector<double>> x1, x2, y1, y2, u1, u2;  // one row per sample
    std::vector<double> run_max_y1, run_max_y2, run_max_u1, run_max_u2, run_max_x1, run_max_x2;
    std::vector<double> x0;          ///< stacked initial state
    double u1_norm = 0, u2_norm = 0; ///< closed-form input norms over [0, T]
    Diagnosis diagnosis;

    size_t samples() const { return t.size(); }
    double x0_norm(int which) const;  ///< max-norm of one subsystem's initial state
    double x0_norm() const;           ///< max-norm of the stacked initial state
};

enum class SignalId { X1, X2, Y1, Y2, U1, U2, X, Y, U };

struct LoopOptions {
    double eps = kEpsLoop;
    int max_iter = kLoopMaxIter;
};

/// Solve the output algebraic loop at one state/input point. Triangular when
/// at most one subsystem has feedthrough; otherwise fixed-point iteration from
/// (h1(x1,0,u1), h2(x2,0,u2)). Throws LoopDivergence when the composed map
/// fails to contract within the iteration budget.
std::pair<std::vector<double>, std::vector<double>> solve_output_loop(
    std::span<const double> x1, std::span<const double> x2, std::span<const double> u1,
    std::span<const double> u2, const SubsystemDynamics& s1, const SubsystemDynamics& s2,
    const LoopOptions& opts = {});

struct IntegrateOptions {
    double escape_threshold = kEscapeThreshold;
    LoopOptions loop;
};

/// Fixed-step 4th-order integration of the interconnection with the output
/// loop solved at every stage. State accumulates in extended precision.
/// Hitting the escape threshold ends the run with a finite-escape diagnosis;
/// a loop failure likewise truncates the record rather than throwing.
TrajectoryRecord integrate(const SubsystemDynamics& s1, const SubsystemDynamics& s2,
                           std::span<const double> x0, const std::vector<InputSignal>& u1,
                           const std::vector<InputSignal>& u2, double T, double dt,
                           const IntegrateOptions& opts = {});

/// Max-norm sup of a recorded signal over the sample window [t1, t2].
double sup_norm(const TrajectoryRecord& rec, SignalId id, double t1, double t2);

struct GainSweepPoint {
    double amplitude;
    double peak;  ///< sup |y| over [0, T_settle]
};

enum class SweepChannel { ExternalInput, CoupledOutput };

struct GainSweep {
    std::vector<GainSweepPoint> curve;  ///< monotone upper envelope over amplitudes
    bool truncated = false;             ///< finite escape ended the sweep early
    double escape_amplitude = 0;
};

/// Open-loop response sweep: drive one exogenous channel (the external input
/// or the coupled output) with constants of increasing amplitude from zero
/// initial state and record the output peak, for fitting candidate gains.
GainSweep estimate_gain_sweep(const SubsystemDynamics& dyn, std::span<const double> amplitudes,
                              double T_settle, SweepChannel channel, double dt = 1e-3);

/// Max-norm of a vector.
double max_norm(std::span<const double> v);

}  // namespace smallgain
