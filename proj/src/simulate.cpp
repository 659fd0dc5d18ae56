#include "smallgain/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace smallgain {

double max_norm(std::span<const double> v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double TrajectoryRecord::x0_norm(int which) const {
    if (which == 1) return max_norm(std::span<const double>(x0.data(), n1));
    return max_norm(std::span<const double>(x0.data() + n1, n2));
}

double TrajectoryRecord::x0_norm() const { return max_norm(x0); }

InputSignal InputSignal::constant(double a) {
    InputSignal s;
    s.kind = Kind::Constant;
    s.amplitude = a;
    return s;
}

InputSignal InputSignal::step(double t0, double a) {
    InputSignal s;
    s.kind = Kind::Step;
    s.t0 = t0;
    s.amplitude = a;
    return s;
}

InputSignal InputSignal::sinusoid(double a, double omega) {
    InputSignal s;
    s.kind = Kind::Sinusoid;
    s.amplitude = a;
    s.omega = omega;
    return s;
}

InputSignal InputSignal::piecewise(std::vector<std::pair<double, double>> table) {
    InputSignal s;
    s.kind = Kind::PiecewiseConstant;
    s.table = std::move(table);
    std::sort(s.table.begin(), s.table.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return s;
}

double InputSignal::eval(double t) const {
    switch (kind) {
        case Kind::Constant: return amplitude;
        case Kind::Step: return t >= t0 ? amplitude : 0.0;
        case Kind::Sinusoid: return amplitude * std::sin(omega * t);
        case Kind::PiecewiseConstant: {
            double v = 0;
            for (const auto& [tk, vk] : table) {
                if (t >= tk) v = vk;
            }
            return v;
        }
    }
    return 0;
}

double InputSignal::sup_norm(double T) const {
    switch (kind) {
        case Kind::Constant: return std::abs(amplitude);
        case Kind::Step: return t0 <= T ? std::abs(amplitude) : 0.0;
        case Kind::Sinusoid:
            if (omega == 0) return 0.0;
            return std::abs(omega) * T >= 0.5 * M_PI ? std::abs(amplitude)
                                                     : std::abs(amplitude * std::sin(omega * T));
        case Kind::PiecewiseConstant: {
            double m = 0;
            for (const auto& [tk, vk] : table) {
                if (tk <= T) m = std::max(m, std::abs(vk));
            }
            return m;
        }
    }
    return 0;
}

namespace {

void eval_inputs(const std::vector<InputSignal>& sig, double t, std::vector<double>& out) {
    out.resize(sig.size());
    for (size_t i = 0; i < sig.size(); ++i) out[i] = sig[i].eval(t);
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> solve_output_loop(
    std::span<const double> x1, std::span<const double> x2, std::span<const double> u1,
    std::span<const double> u2, const SubsystemDynamics& s1, const SubsystemDynamics& s2,
    const LoopOptions& opts) {
    std::vector<double> y1(s1.dims.output), y2(s2.dims.output);
    std::vector<double> zero1(s1.dims.output, 0.0), zero2(s2.dims.output, 0.0);

    if (!s1.feedthrough && !s2.feedthrough) {
        s1.h(x1, zero2, u1, y1);
        s2.h(x2, zero1, u2, y2);
        return {y1, y2};
    }
    if (!s1.feedthrough) {  // y1 independent of y2: triangular
        s1.h(x1, zero2, u1, y1);
        s2.h(x2, y1, u2, y2);
        return {y1, y2};
    }
    if (!s2.feedthrough) {
        s2.h(x2, zero1, u2, y2);
        s1.h(x1, y2, u1, y1);
        return {y1, y2};
    }

    // both feed through: fixed-point iteration from the decoupled outputs
    s1.h(x1, zero2, u1, y1);
    s2.h(x2, zero1, u2, y2);
    std::vector<double> ny1(y1.size()), ny2(y2.size());
    for (int it = 0; it < opts.max_iter; ++it) {
        s1.h(x1, y2, u1, ny1);
        s2.h(x2, ny1, u2, ny2);
        double change = 0;
        for (size_t i = 0; i < y1.size(); ++i) change = std::max(change, std::abs(ny1[i] - y1[i]));
        for (size_t i = 0; i < y2.size(); ++i) change = std::max(change, std::abs(ny2[i] - y2[i]));
        y1 = ny1;
        y2 = ny2;
        if (change <= opts.eps) return {y1, y2};
    }
    throw LoopDivergence("output loop failed to contract within " + std::to_string(opts.max_iter) +
                         " iterations");
}

TrajectoryRecord integrate(const SubsystemDynamics& s1, const SubsystemDynamics& s2,
                           std::span<const double> x0, const std::vector<InputSignal>& u1sig,
                           const std::vector<InputSignal>& u2sig, double T, double dt,
                           const IntegrateOptions& opts) {
    if (dt <= 0 || T < dt) throw Error("integrate requires dt > 0 and T >= dt");
    const int n1 = s1.dims.state, n2 = s2.dims.state;
    if (static_cast<int>(x0.size()) != n1 + n2) throw Error("x0 length does not match state dims");

    TrajectoryRecord rec;
    rec.dt = dt;
    rec.T = T;
    rec.n1 = n1;
    rec.n2 = n2;
    rec.x0.assign(x0.begin(), x0.end());
    for (const auto& s : u1sig) rec.u1_norm = std::max(rec.u1_norm, s.sup_norm(T));
    for (const auto& s : u2sig) rec.u2_norm = std::max(rec.u2_norm, s.sup_norm(T));

    // state accumulates in extended precision: at dt ~ 1e-3 the 4th-order
    // truncation error sits near the double rounding floor
    std::vector<long double> x(x0.begin(), x0.end());
    std::vector<double> xd(n1 + n2), k1(n1 + n2), k2(n1 + n2), k3(n1 + n2), k4(n1 + n2);
    std::vector<double> u1v, u2v;

    auto deriv = [&](const std::vector<double>& xs, double t, std::vector<double>& out) {
        std::span<const double> x1s(xs.data(), n1), x2s(xs.data() + n1, n2);
        eval_inputs(u1sig, t, u1v);
        eval_inputs(u2sig, t, u2v);
        auto [y1, y2] = solve_output_loop(x1s, x2s, u1v, u2v, s1, s2, opts.loop);
        s1.f(x1s, y2, u1v, std::span<double>(out.data(), n1));
        s2.f(x2s, y1, u2v, std::span<double>(out.data() + n1, n2));
    };

    size_t steps = static_cast<size_t>(std::llround(T / dt));
    rec.t.reserve(steps + 1);

    auto record_sample = [&](double t) -> bool {
        for (int i = 0; i < n1 + n2; ++i) xd[i] = static_cast<double>(x[i]);
        std::span<const double> x1s(xd.data(), n1), x2s(xd.data() + n1, n2);
        eval_inputs(u1sig, t, u1v);
        eval_inputs(u2sig, t, u2v);
        std::vector<double> y1, y2;
        try {
            std::tie(y1, y2) = solve_output_loop(x1s, x2s, u1v, u2v, s1, s2, opts.loop);
        } catch (const LoopDivergence&) {
            rec.diagnosis.loop_failure = true;
            rec.diagnosis.loop_failure_time = t;
            return false;
        }
        rec.t.push_back(t);
        rec.x1.emplace_back(x1s.begin(), x1s.end());
        rec.x2.emplace_back(x2s.begin(), x2s.end());
        rec.y1.push_back(y1);
        rec.y2.push_back(y2);
        rec.u1.push_back(u1v);
        rec.u2.push_back(u2v);
        auto push_max = [](std::vector<double>& rm, double v) {
            rm.push_back(rm.empty() ? v : std::max(rm.back(), v));
        };
        push_max(rec.run_max_x1, max_norm(x1s));
        push_max(rec.run_max_x2, max_norm(x2s));
        push_max(rec.run_max_y1, max_norm(y1));
        push_max(rec.run_max_y2, max_norm(y2));
        push_max(rec.run_max_u1, max_norm(u1v));
        push_max(rec.run_max_u2, max_norm(u2v));

        if (std::max(max_norm(x1s), max_norm(x2s)) > opts.escape_threshold) {
            rec.diagnosis.finite_escape = true;
            rec.diagnosis.escape_time = t;
            return false;
        }
        return true;
    };

    if (!record_sample(0.0)) return rec;

    std::vector<double> xs(n1 + n2);
    for (size_t step = 0; step < steps; ++step) {
        double t = step * dt;
        try {
            for (int i = 0; i < n1 + n2; ++i) xs[i] = static_cast<double>(x[i]);
            deriv(xs, t, k1);
            for (int i = 0; i < n1 + n2; ++i) xs[i] = static_cast<double>(x[i] + 0.5L * dt * k1[i]);
            deriv(xs, t + 0.5 * dt, k2);
            for (int i = 0; i < n1 + n2; ++i) xs[i] = static_cast<double>(x[i] + 0.5L * dt * k2[i]);
            deriv(xs, t + 0.5 * dt, k3);
            for (int i = 0; i < n1 + n2; ++i) xs[i] = static_cast<double>(x[i] + static_cast<long double>(dt) * k3[i]);
            deriv(xs, t + dt, k4);
        } catch (const LoopDivergence&) {
            rec.diagnosis.loop_failure = true;
            rec.diagnosis.loop_failure_time = t;
            break;
        }
        const long double w = static_cast<long double>(dt) / 6.0L;
        for (int i = 0; i < n1 + n2; ++i) {
            x[i] += w * (k1[i] + 2.0L * k2[i] + 2.0L * k3[i] + k4[i]);
        }
        if (!record_sample((step + 1) * dt)) break;
    }
    return rec;
}

namespace {

const std::vector<double>* run_max_of(const TrajectoryRecord& rec, SignalId id) {
    switch (id) {
        case SignalId::X1: return &rec.run_max_x1;
        case SignalId::X2: return &rec.run_max_x2;
        case SignalId::Y1: return &rec.run_max_y1;
        case SignalId::Y2: return &rec.run_max_y2;
        case SignalId::U1: return &rec.run_max_u1;
        case SignalId::U2: return &rec.run_max_u2;
        default: return nullptr;
    }
}

double sample_norm(const TrajectoryRecord& rec, SignalId id, size_t i) {
    switch (id) {
        case SignalId::X1: return max_norm(rec.x1[i]);
        case SignalId::X2: return max_norm(rec.x2[i]);
        case SignalId::Y1: return max_norm(rec.y1[i]);
        case SignalId::Y2: return max_norm(rec.y2[i]);
        case SignalId::U1: return max_norm(rec.u1[i]);
        case SignalId::U2: return max_norm(rec.u2[i]);
        case SignalId::X: return std::max(max_norm(rec.x1[i]), max_norm(rec.x2[i]));
        case SignalId::Y: return std::max(max_norm(rec.y1[i]), max_norm(rec.y2[i]));
        case SignalId::U: return std::max(max_norm(rec.u1[i]), max_norm(rec.u2[i]));
    }
    return 0;
}

}  // namespace

double sup_norm(const TrajectoryRecord& rec, SignalId id, double t1, double t2) {
    if (rec.samples() == 0) throw Error("sup_norm on an empty record");
    if (t1 < 0 || t2 < t1) throw Error("sup_norm window is empty or reversed");
    const double eps = 0.5 * rec.dt;
    size_t lo = static_cast<size_t>(std::max(0.0, std::ceil((t1 - eps) / rec.dt)));
    size_t hi_idx = static_cast<size_t>(std::floor((t2 + eps) / rec.dt));
    hi_idx = std::min(hi_idx, rec.samples() - 1);
    if (lo > hi_idx) throw Error("sup_norm window contains no samples");

    if (lo == 0) {
        if (const auto* rm = run_max_of(rec, id)) return (*rm)[hi_idx];
    }
    double m = 0;
    for (size_t i = lo; i <= hi_idx; ++i) m = std::max(m, sample_norm(rec, id, i));
    return m;
}

GainSweep estimate_gain_sweep(const SubsystemDynamics& dyn, std::span<const double> amplitudes,
                              double T_settle, SweepChannel channel, double dt) {
    GainSweep sweep;
    const int n = dyn.dims.state;
    std::vector<double> u(dyn.dims.input, 0.0);
    // constant drive replicated across the coupled-output components
    std::vector<double> yo(std::max(1, dyn.y_other_dim), 0.0);

    std::vector<double> x(n), k1(n), k2(n), k3(n), k4(n), xs(n), y(dyn.dims.output);
    double running = 0;
    for (double a : amplitudes) {
        std::fill(u.begin(), u.end(), 0.0);
        std::fill(yo.begin(), yo.end(), 0.0);
        if (channel == SweepChannel::ExternalInput) {
            std::fill(u.begin(), u.end(), a);
        } else {
            std::fill(yo.begin(), yo.end(), a);
        }

        std::fill(x.begin(), x.end(), 0.0);
        double peak = 0;
        bool escaped = false;
        size_t steps = static_cast<size_t>(std::llround(T_settle / dt));
        for (size_t s = 0; s <= steps; ++s) {
            dyn.h(x, yo, u, y);
            peak = std::max(peak, max_norm(y));
            if (max_norm(x) > kEscapeThreshold) {
                escaped = true;
                break;
            }
            if (s == steps) break;
            auto f = [&](const std::vector<double>& xv, std::vector<double>& out) {
                dyn.f(xv, yo, u, out);
            };
            f(x, k1);
            for (int i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k1[i];
            f(xs, k2);
            for (int i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k2[i];
            f(xs, k3);
            for (int i = 0; i < n; ++i) xs[i] = x[i] + dt * k3[i];
            f(xs, k4);
            for (int i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
        if (escaped) {
            sweep.truncated = true;
            sweep.escape_amplitude = a;
            break;
        }
        running = std::max(running, peak);  // monotone upper envelope
        sweep.curve.push_back({a, running});
    }
    return sweep;
}

}  // namespace smallgain
