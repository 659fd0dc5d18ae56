#include "smallgain/verify.hpp"

#include <algorithm>
#include <cmath>

namespace smallgain {

namespace {

VerificationReport scan(const std::string& name, const TrajectoryRecord& rec,
                        const std::function<double(size_t)>& slack_at, double eps) {
    VerificationReport rep;
    rep.bound_name = name;
    bool first = true;
    for (size_t i = 0; i < rec.samples(); ++i) {
        double s = slack_at(i);
        if (first || s < rep.min_slack) {
            rep.min_slack = s;
            rep.worst_t = rec.t[i];
            first = false;
        }
    }
    rep.pass = !first && rep.min_slack >= -eps;
    return rep;
}

}  // namespace

VerificationReport verify_iops_subsystem(const TrajectoryRecord& rec, const SubsystemContract& c,
                                         int which, double eps) {
    const bool one = which == 1;
    const auto& y = one ? rec.y1 : rec.y2;
    const auto& rm_other = one ? rec.run_max_y2 : rec.run_max_y1;
    double x0n = rec.x0_norm(which);
    double un = one ? rec.u1_norm : rec.u2_norm;
    double gu = c.gamma_u.eval(un);

    return scan("iops_y" + std::to_string(which), rec,
                [&](size_t i) {
                    double rhs = c.beta.eval(x0n, rec.t[i]) + c.gamma_y.eval(rm_other[i]) + gu + c.d;
                    return rhs - max_norm(y[i]);
                },
                eps);
}

VerificationReport verify_uo(const TrajectoryRecord& rec, const ScalarFn& alpha0, double D0,
                             int which, double eps) {
    const bool one = which == 1;
    const auto& x = one ? rec.x1 : rec.x2;
    const auto& rm_u = one ? rec.run_max_u1 : rec.run_max_u2;
    const auto& rm_y_own = one ? rec.run_max_y1 : rec.run_max_y2;
    const auto& rm_y_other = one ? rec.run_max_y2 : rec.run_max_y1;
    double x0n = rec.x0_norm(which);

    return scan("uo_x" + std::to_string(which), rec,
                [&](size_t i) {
                    double io = std::max({rm_u[i], rm_y_own[i], rm_y_other[i]});
                    return alpha0.eval(x0n + io) + D0 - max_norm(x[i]);
                },
                eps);
}

CertificateCheck verify_certificate(const TrajectoryRecord& rec, const Certificate& cert,
                                    double eps) {
    double x0n = rec.x0_norm();
    double un = std::max(rec.u1_norm, rec.u2_norm);
    double g1 = cert.gain_y1.eval(un);
    double g2 = cert.gain_y2.eval(un);
    double gt = cert.gain_total.eval(un);

    CertificateCheck out;
    out.y1 = scan("cert_y1", rec,
                  [&](size_t i) {
                      return cert.beta1p.eval(x0n, rec.t[i]) + g1 + cert.d1p - max_norm(rec.y1[i]);
                  },
                  eps);
    out.y2 = scan("cert_y2", rec,
                  [&](size_t i) {
                      return cert.beta2p.eval(x0n, rec.t[i]) + g2 + cert.d2p - max_norm(rec.y2[i]);
                  },
                  eps);
    out.total = scan("cert_total", rec,
                     [&](size_t i) {
                         double b = cert.beta1p.eval(x0n, rec.t[i]) + cert.beta2p.eval(x0n, rec.t[i]);
                         double ynorm = std::max(max_norm(rec.y1[i]), max_norm(rec.y2[i]));
                         return b + gt + cert.d1p + cert.d2p - ynorm;
                     },
                     eps);
    return out;
}

VerificationReport verify_step1_bound(const TrajectoryRecord& rec, const SubsystemContract& c1,
                                      const SubsystemContract& c2, const RhoPair& rho,
                                      double eps) {
    ScalarFn ipr1i = id_plus(ScalarFn::inverse_of(rho.rho1.with_cap(kComposeCap)));
    ScalarFn ipr2i = id_plus(ScalarFn::inverse_of(rho.rho2.with_cap(kComposeCap)));
    double x01 = rec.x0_norm(1);
    double x02 = rec.x0_norm(2);
    double v1 = c1.gamma_u.eval(rec.u1_norm);
    double v2 = c2.gamma_u.eval(rec.u2_norm);
    double inner = c2.gamma_y.with_cap(kComposeCap)
                       .eval(ipr1i.eval(c1.beta.eval(x01, 0.0) + v1 + c1.d));
    double bound = ipr2i.eval(c2.beta.eval(x02, 0.0) + rho.d3 + inner + v2 + c2.d);

    VerificationReport rep;
    rep.bound_name = "step1_y2";
    double observed = rec.run_max_y2.empty() ? 0.0 : rec.run_max_y2.back();
    rep.min_slack = bound - observed;
    rep.worst_t = rec.t.empty() ? 0.0 : rec.t.back();
    rep.pass = rep.min_slack >= -eps;
    return rep;
}

std::vector<VerificationReport> verify_iss_remark(const TrajectoryRecord& rec,
                                                  const IssContract& s1, const IssContract& s2,
                                                  const StateBound& state, double eps) {
    std::vector<VerificationReport> out;
    double x01 = rec.x0_norm(1);
    double x02 = rec.x0_norm(2);
    double g1u = s1.gamma_xu.eval(rec.u1_norm);
    double g2u = s2.gamma_xu.eval(rec.u2_norm);

    out.push_back(scan("iss_x1", rec,
                       [&](size_t i) {
                           double rhs = s1.beta_x.eval(x01, rec.t[i]) +
                                        s1.gamma_xy.eval(rec.run_max_y2[i]) + g1u;
                           return rhs - max_norm(rec.x1[i]);
                       },
                       eps));
    out.push_back(scan("iss_x2", rec,
                       [&](size_t i) {
                           double rhs = s2.beta_x.eval(x02, rec.t[i]) +
                                        s2.gamma_xy.eval(rec.run_max_y1[i]) + g2u;
                           return rhs - max_norm(rec.x2[i]);
                       },
                       eps));

    // combined interconnection bound from the zero-offset state machinery
    StateBound z = state.zero_offsets();
    double x0n = rec.x0_norm();
    double bound = z.s_inf(x0n, rec.u1_norm, rec.u2_norm);
    out.push_back(scan("iss_combined", rec,
                       [&](size_t i) {
                           double xn = std::max(max_norm(rec.x1[i]), max_norm(rec.x2[i]));
                           return bound - xn;
                       },
                       eps));
    return out;
}

}  // namespace smallgain
