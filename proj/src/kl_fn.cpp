#include "smallgain/kl_fn.hpp"

#include <algorithm>
#include <cmath>

namespace smallgain {

KLFn KLFn::exp_decay(double M, double lambda, double cap) {
    if (M <= 0 || lambda <= 0) throw ClassClosureError("exp_decay requires M > 0 and lambda > 0");
    KLFn b;
    b.family_ = Family::ExpDecay;
    b.M_ = M;
    b.lambda_ = lambda;
    b.cap_ = cap;
    return b;
}

KLFn KLFn::scaled(ScalarFn f, double lambda) {
    if (lambda <= 0) throw ClassClosureError("scaled KL requires lambda > 0");
    if (!is_class_k(f.fn_class())) {
        throw ClassClosureError("scaled KL requires a class-K section, got " + std::string(to_string(f.fn_class())));
    }
    KLFn b;
    b.family_ = Family::Scaled;
    b.lambda_ = lambda;
    b.cap_ = f.cap();
    b.f_.push_back(std::move(f));
    return b;
}

KLFn KLFn::tabulated(std::vector<double> s_grid, std::vector<double> t_grid,
                     std::vector<std::vector<double>> values, const KLValidateOptions& opts) {
    if (s_grid.size() < 2 || t_grid.size() < 2) throw ClassClosureError("tabulated KL needs at least a 2x2 grid");
    if (values.size() != s_grid.size()) throw ClassClosureError("tabulated KL: row count mismatch");
    for (auto& row : values) {
        if (row.size() != t_grid.size()) throw ClassClosureError("tabulated KL: column count mismatch");
    }
    if (s_grid.front() != 0.0) throw ClassClosureError("tabulated KL: s grid must start at 0");
    if (t_grid.front() != 0.0) throw ClassClosureError("tabulated KL: t grid must start at 0");
    for (size_t i = 1; i < s_grid.size(); ++i) {
        if (s_grid[i] <= s_grid[i - 1]) throw ClassClosureError("tabulated KL: s grid must increase");
    }
    for (size_t j = 1; j < t_grid.size(); ++j) {
        if (t_grid[j] <= t_grid[j - 1]) throw ClassClosureError("tabulated KL: t grid must increase");
    }

    double scale = 0;
    for (auto& row : values)
        for (double v : row) scale = std::max(scale, std::abs(v));
    double tol = opts.eps_monotone * std::max(1.0, scale);

    // beta(0, t) = 0 exactly; snap sub-tolerance noise
    for (double& v : values.front()) {
        if (std::abs(v) > opts.eps_zero_row * std::max(1.0, scale)) {
            throw ClassClosureError("tabulated KL: first row must be zero (beta(0,t) = 0)");
        }
        v = 0.0;
    }
    // class K in s: columns non-decreasing
    for (size_t j = 0; j < t_grid.size(); ++j) {
        for (size_t i = 1; i < values.size(); ++i) {
            if (values[i][j] < values[i - 1][j] - tol) {
                throw ClassClosureError("tabulated KL: values must be non-decreasing in s");
            }
        }
    }
    // non-increasing in t: rows
    for (auto& row : values) {
        for (size_t j = 1; j < row.size(); ++j) {
            if (row[j] > row[j - 1] + tol) {
                throw ClassClosureError("tabulated KL: values must be non-increasing in t");
            }
        }
    }

    KLFn b;
    b.family_ = Family::Tabulated;
    b.cap_ = s_grid.back();
    b.tail_ok_ = true;
    for (auto& row : values) {
        if (row.back() > opts.tail_tol_rel * std::max(row.front(), 1e-300)) b.tail_ok_ = false;
    }
    if (opts.require_tail && !b.tail_ok_) {
        throw ClassClosureError("tabulated KL: last column is not below the decay tolerance");
    }
    // crude decay-rate estimate from the largest row
    b.lambda_ = 1.0;
    if (!values.empty() && values.back().front() > 0 && values.back().back() >= 0) {
        double v0 = values.back().front(), v1 = std::max(values.back().back(), v0 * 1e-12);
        b.lambda_ = std::log(v0 / v1) / std::max(t_grid.back(), 1e-12);
    }
    b.s_grid_ = std::move(s_grid);
    b.t_grid_ = std::move(t_grid);
    b.values_ = std::move(values);
    return b;
}

double KLFn::cap() const { return cap_; }

double KLFn::eval(double s, double t) const {
    if (!(s >= 0.0)) throw DomainExceeded("KL argument s is negative or NaN");
    if (t < 0.0) throw DomainExceeded("KL argument t is negative");
    switch (family_) {
        case Family::ExpDecay:
            if (s > cap_ * (1 + 1e-12)) throw DomainExceeded("KL argument s exceeds cap");
            return M_ * s * std::exp(-lambda_ * t);
        case Family::Scaled:
            return f_[0].eval(s) * std::exp(-lambda_ * t);
        case Family::Tabulated: {
            if (s > s_grid_.back() * (1 + 1e-12)) {
                throw GridExceeded("KL tabulation queried at s beyond the grid; extend the grid");
            }
            s = std::min(s, s_grid_.back());
            t = std::min(t, t_grid_.back());  // clamp to the final column
            auto si = std::upper_bound(s_grid_.begin(), s_grid_.end(), s) - s_grid_.begin();
            auto ti = std::upper_bound(t_grid_.begin(), t_grid_.end(), t) - t_grid_.begin();
            size_t i1 = std::min<size_t>(std::max<long>(si, 1), s_grid_.size() - 1);
            size_t j1 = std::min<size_t>(std::max<long>(ti, 1), t_grid_.size() - 1);
            size_t i0 = i1 - 1, j0 = j1 - 1;
            double us = (s - s_grid_[i0]) / (s_grid_[i1] - s_grid_[i0]);
            double ut = (t - t_grid_[j0]) / (t_grid_[j1] - t_grid_[j0]);
            us = std::clamp(us, 0.0, 1.0);
            ut = std::clamp(ut, 0.0, 1.0);
            double a = values_[i0][j0] * (1 - ut) + values_[i0][j1] * ut;
            double b = values_[i1][j0] * (1 - ut) + values_[i1][j1] * ut;
            return a * (1 - us) + b * us;
        }
    }
    return 0;
}

ScalarFn KLFn::section_zero() const {
    switch (family_) {
        case Family::ExpDecay: return ScalarFn::linear(M_, cap_);
        case Family::Scaled: return f_[0];
        case Family::Tabulated:
            throw ClassClosureError("tabulated KL has no tree-valued time-zero section");
    }
    throw ClassClosureError("unreachable");
}

double KLFn::decay_rate_hint() const { return lambda_; }

KLFn KLFn::with_cap(double cap) const {
    KLFn b = *this;
    switch (family_) {
        case Family::ExpDecay: b.cap_ = cap; break;
        case Family::Scaled:
            b.f_[0] = f_[0].with_cap(cap);
            b.cap_ = cap;
            break;
        case Family::Tabulated: break;  // grid-bound
    }
    return b;
}

double kl_eval(const KLFn& beta, double s, double t) { return beta.eval(s, t); }

}  // namespace smallgain
