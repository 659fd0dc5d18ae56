#pragma once

#include <string>
#include <vector>

#include "smallgain/gain_composer.hpp"
#include "smallgain/simulate.hpp"

namespace smallgain {

/// Outcome of one bound check over a trajectory: the minimum slack
/// (bound minus observed) across samples and where it occurred.
struct VerificationReport {
    std::string bound_name;
    double min_slack = 0;
    double worst_t = 0;
    bool pass = false;
};

/// Check the hypothesis bound
///   |y_i(t)| <= beta(|x_i(0)|, t) + gamma_y(||y_j||_[0,t]) + gamma_u(||u_i||) + d.
VerificationReport verify_iops_subsystem(const TrajectoryRecord& rec, const SubsystemContract& c,
                                         int which, double eps = kEpsVerify);

/// Check boundedness observability
///   |x_i(t)| <= alpha0(|x_i(0)| + ||(u_i, y_j, y_i)_t||) + D0.
VerificationReport verify_uo(const TrajectoryRecord& rec, const ScalarFn& alpha0, double D0,
                             int which, double eps = kEpsVerify);

struct CertificateCheck {
    VerificationReport y1;
    VerificationReport y2;
    VerificationReport total;

    bool all_pass() const { return y1.pass && y2.pass && total.pass; }
};

/// Check the certified conclusion against a trajectory:
///   |y_i(t)| <= beta_i'(|x(0)|, t) + (r_i + r3_i)(||u||) + d_i'
/// plus the summed total-output bound.
CertificateCheck verify_certificate(const TrajectoryRecord& rec, const Certificate& cert,
                                    double eps = kEpsVerify);

/// Check the a-priori bound used to rule out finite escape:
///   ||y2||_[0,T] <= (Id+rho2^-1)(beta2(|x2(0)|,0) + d3
///                   + gamma2((Id+rho1^-1)(beta1(|x1(0)|,0) + v1 + d1)) + v2 + d2).
VerificationReport verify_step1_bound(const TrajectoryRecord& rec, const SubsystemContract& c1,
                                      const SubsystemContract& c2, const RhoPair& rho,
                                      double eps = kEpsVerify);

/// ISS-style state contract for one subsystem.
struct IssContract {
    KLFn beta_x;
    ScalarFn gamma_xy;
    ScalarFn gamma_xu;
};

/// Per-subsystem ISS bounds plus the combined interconnection check built
/// from the zero-offset state-bound machinery.
std::vector<VerificationReport> verify_iss_remark(const TrajectoryRecord& rec,
                                                  const IssContract& s1, const IssContract& s2,
                                                  const StateBound& state, double eps = kEpsVerify);

}  // namespace smallgain
