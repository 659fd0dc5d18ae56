#include "smallgain/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace smallgain {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& p, const std::string& text,
                std::vector<std::filesystem::path>& artifacts) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write artifact " + p.string());
    out << text;
    artifacts.push_back(p);
}

void write_json(const std::filesystem::path& p, const ordered_json& j,
                std::vector<std::filesystem::path>& artifacts) {
    write_text(p, j.dump(2) + "\n", artifacts);
}

ordered_json report_json(const VerificationReport& r) {
    ordered_json j;
    j["bound"] = r.bound_name;
    j["min_slack"] = r.min_slack;
    j["worst_t"] = r.worst_t;
    j["pass"] = r.pass;
    return j;
}

std::string margin_csv(const MarginReport& rep) {
    std::ostringstream os;
    os << "s,slack_forward,slack_reverse\n";
    for (const auto& p : rep.curve) {
        os << g17(p.s) << ',' << g17(p.slack_forward) << ',' << g17(p.slack_reverse) << '\n';
    }
    return os.str();
}

std::string beta_prime_csv(const KLFn& b) {
    std::ostringstream os;
    os << "s,t,value\n";
    const auto& sg = b.s_knots();
    const auto& tg = b.t_knots();
    const auto& v = b.table();
    for (size_t i = 0; i < sg.size(); ++i) {
        for (size_t j = 0; j < tg.size(); ++j) {
            os << g17(sg[i]) << ',' << g17(tg[j]) << ',' << g17(v[i][j]) << '\n';
        }
    }
    return os.str();
}

std::string traj_csv(const TrajectoryRecord& rec) {
    std::ostringstream os;
    os << "t";
    auto head = [&](const char* base, size_t n) {
        for (size_t i = 0; i < n; ++i) os << ',' << base << '_' << i;
    };
    head("x1", rec.x1.empty() ? 0 : rec.x1[0].size());
    head("x2", rec.x2.empty() ? 0 : rec.x2[0].size());
    head("y1", rec.y1.empty() ? 0 : rec.y1[0].size());
    head("y2", rec.y2.empty() ? 0 : rec.y2[0].size());
    head("u1", rec.u1.empty() ? 0 : rec.u1[0].size());
    head("u2", rec.u2.empty() ? 0 : rec.u2[0].size());
    os << '\n';
    for (size_t i = 0; i < rec.samples(); ++i) {
        os << g17(rec.t[i]);
        for (const auto* block : {&rec.x1, &rec.x2, &rec.y1, &rec.y2, &rec.u1, &rec.u2}) {
            for (double v : (*block)[i]) os << ',' << g17(v);
        }
        os << '\n';
    }
    return os.str();
}

ordered_json fn_json(const ScalarFn& f) {
    ordered_json j;
    j["expr"] = f.to_string();
    j["class"] = to_string(f.fn_class());
    j["cap"] = f.cap();
    if (auto k = f.linear_slope()) j["linear_slope"] = *k;
    return j;
}

}  // namespace

PipelineResult run_pipeline(const ProblemSpec& spec_in, const PipelineOptions& opts) {
    namespace fs = std::filesystem;
    ProblemSpec spec = spec_in;
    if (opts.mode_override) spec.cert.mode = *opts.mode_override;
    if (opts.grid_override) spec.cert.condition_grid_n = *opts.grid_override;
    if (opts.s_max_override) spec.cert.s_max = *opts.s_max_override;
    if (opts.dt_override) {
        for (auto& sc : spec.scenarios) sc.dt = *opts.dt_override;
    }

    PipelineResult res;
    fs::create_directories(opts.out_dir);

    const bool want_certify = opts.stages.count(Stage::Certify) > 0;
    const bool want_compose = opts.stages.count(Stage::Compose) > 0;
    const bool want_simulate = opts.stages.count(Stage::Simulate) > 0;
    const bool want_verify = opts.stages.count(Stage::Verify) > 0;
    if (want_compose && !want_certify) throw Error("the compose stage requires certify");
    if (want_verify && !(want_certify && want_compose && want_simulate)) {
        throw Error("the verify stage requires certify, compose and simulate in the same run");
    }

    // ---- certify ----------------------------------------------------------
    if (want_certify) {
        SmallGainProblem prob{spec.con1.gamma_y.with_cap(spec.cert.s_max * 8),
                              spec.con2.gamma_y.with_cap(spec.cert.s_max * 8), spec.cert.s_l,
                              spec.cert.s_max};
        SmallGainWitness w = search_rho_linear(prob, spec.cert.c_grid, spec.cert.condition_grid_n);
        res.feasible = w.feasible;

        ordered_json j;
        j["problem"] = spec.name;
        j["feasible"] = w.feasible;
        j["c1"] = w.c1;
        j["c2"] = w.c2;
        j["margin_abs"] = w.margin_abs;
        j["margin_rel"] = w.margin_rel;
        j["d3"] = w.d3;
        j["s_l"] = spec.cert.s_l;
        j["S_max"] = spec.cert.s_max;
        j["grid_n"] = w.report.grid_n;
        j["grid_hi"] = w.report.grid_hi;
        j["worst_s"] = w.report.worst_s;
        write_json(opts.out_dir / "witness.json", j, res.artifacts);
        write_text(opts.out_dir / "margin.csv", margin_csv(w.report), res.artifacts);
        res.witness = std::move(w);
        if (!res.feasible) res.exit_code = 2;
    }

    // ---- compose ----------------------------------------------------------
    if (want_compose && res.feasible) {
        ComposerParams params;
        params.rho3 = spec.cert.rho3;
        params.r3_1 = spec.cert.r3_1;
        params.mode = spec.cert.mode;
        RhoPair rho{res.witness->rho1, res.witness->rho2, res.witness->d3};
        CompositionWorkspace ws = build_workspace(spec.con1, spec.con2, rho, params);

        SimCaps caps;
        caps.x0_max = 1;
        for (const auto& sc : spec.scenarios) {
            caps.x0_max = std::max(caps.x0_max, max_norm(sc.x0));
            double u1 = 0, u2 = 0;
            for (const auto& s : sc.inputs1) u1 = std::max(u1, s.sup_norm(sc.T));
            for (const auto& s : sc.inputs2) u2 = std::max(u2, s.sup_norm(sc.T));
            caps.u1_max = std::max(caps.u1_max, u1);
            caps.u2_max = std::max(caps.u2_max, u2);
        }
        Certificate cert = assemble_certificate(spec.con1, spec.con2, ws, caps);

        ordered_json j;
        j["problem"] = spec.name;
        j["mode"] = to_string(cert.mode);
        j["rho1"] = fn_json(ws.rho.rho1);
        j["rho2"] = fn_json(ws.rho.rho2);
        j["rho3"] = fn_json(ws.rho3);
        j["r3_1"] = fn_json(ws.r3_1);
        j["d3"] = cert.d3;
        j["d_tilde1"] = cert.d_tilde1;
        j["d_tilde2"] = cert.d_tilde2;
        j["d1_prime"] = cert.d1p;
        j["d2_prime"] = cert.d2p;
        j["ios"] = cert.ios();
        j["r1"] = fn_json(cert.r1);
        j["r2"] = fn_json(cert.r2);
        j["r3_2"] = fn_json(cert.r3_2);
        j["gain_y1"] = fn_json(cert.gain_y1);
        j["gain_y2"] = fn_json(cert.gain_y2);
        j["gain_total"] = fn_json(cert.gain_total);
        j["alpha"] = fn_json(ws.alpha);
        j["alpha_check_slack"] = ws.alpha_check_slack;
        j["caps"] = {{"x0_max", caps.x0_max}, {"u1_max", caps.u1_max}, {"u2_max", caps.u2_max}};
        write_json(opts.out_dir / "certificate.json", j, res.artifacts);
        write_text(opts.out_dir / "beta_prime_1.csv", beta_prime_csv(cert.beta1p), res.artifacts);
        write_text(opts.out_dir / "beta_prime_2.csv", beta_prime_csv(cert.beta2p), res.artifacts);
        res.certificate = std::move(cert);
    }

    // ---- simulate ---------------------------------------------------------
    if (want_simulate) {
        SubsystemDynamics d1 = spec.dyn1.instantiate();
        SubsystemDynamics d2 = spec.dyn2.instantiate();
        for (const auto& sc : spec.scenarios) {
            TrajectoryRecord rec = integrate(d1, d2, sc.x0, sc.inputs1, sc.inputs2, sc.T, sc.dt);
            write_text(opts.out_dir / ("traj_" + sc.name + ".csv"), traj_csv(rec), res.artifacts);
            res.trajectories.emplace_back(sc.name, std::move(rec));
        }
    }

    // ---- verify -----------------------------------------------------------
    if (want_verify && res.feasible && res.certificate) {
        RhoPair rho{res.witness->rho1, res.witness->rho2, res.witness->d3};
        for (const auto& [name, rec] : res.trajectories) {
            auto add = [&](VerificationReport r) {
                r.bound_name += "_" + name;
                write_json(opts.out_dir / ("verify_" + r.bound_name + ".json"), report_json(r),
                           res.artifacts);
                res.reports.push_back(std::move(r));
            };
            add(verify_iops_subsystem(rec, spec.con1, 1));
            add(verify_iops_subsystem(rec, spec.con2, 2));
            add(verify_uo(rec, spec.con1.alpha0, spec.con1.D0, 1));
            add(verify_uo(rec, spec.con2.alpha0, spec.con2.D0, 2));
            add(verify_step1_bound(rec, spec.con1, spec.con2, rho));
            CertificateCheck cc = verify_certificate(rec, *res.certificate);
            add(cc.y1);
            add(cc.y2);
            add(cc.total);
            if (spec.iss1 && spec.iss2) {
                for (auto& r : verify_iss_remark(rec, *spec.iss1, *spec.iss2,
                                                 res.certificate->workspace.state)) {
                    add(std::move(r));
                }
            }
        }
        for (const auto& r : res.reports) {
            if (!r.pass && res.exit_code == 0) res.exit_code = 1;
        }
    }

    res.summary = emit_report(spec, res);
    write_text(opts.out_dir / "summary.txt", res.summary, res.artifacts);
    return res;
}

std::string emit_report(const ProblemSpec& spec, const PipelineResult& res) {
    std::ostringstream os;
    os << "problem: " << spec.name << "\n";
    if (res.witness) {
        const auto& w = *res.witness;
        os << "small-gain condition: " << (w.feasible ? "feasible" : "INFEASIBLE")
           << " (rho1 = " << g17(w.c1) << "*s, rho2 = " << g17(w.c2) << "*s, margin "
           << g17(w.margin_abs) << ")\n";
        if (!w.feasible) {
            os << "  worst margin at s = " << g17(w.report.worst_s) << "\n";
        } else {
            os << "  d3 = " << g17(w.d3) << "\n";
        }
    }
    if (res.certificate) {
        const auto& c = *res.certificate;
        os << "certificate (" << to_string(c.mode) << " mode):\n";
        auto gain_line = [&](const char* label, const ScalarFn& g) {
            os << "  " << label << ": ";
            if (auto k = g.linear_slope())
                os << g17(*k) << "*s";
            else
                os << g.to_string();
            os << "\n";
        };
        gain_line("gain y1 (r1 + r3_1)", c.gain_y1);
        gain_line("gain y2 (r2 + r3_2)", c.gain_y2);
        gain_line("gain total", c.gain_total);
        if (c.ios()) {
            os << "  offsets: d' = 0 (IOS)\n";
        } else {
            os << "  offsets: d1' = " << g17(c.d1p) << ", d2' = " << g17(c.d2p)
               << " (total " << g17(c.d1p + c.d2p) << ")\n";
        }
    }
    for (const auto& [name, rec] : res.trajectories) {
        os << "trajectory " << name << ": " << rec.samples() << " samples";
        if (rec.diagnosis.finite_escape) {
            os << " — FINITE ESCAPE at t = " << g17(rec.diagnosis.escape_time);
        }
        if (rec.diagnosis.loop_failure) {
            os << " — OUTPUT LOOP DIVERGED at t = " << g17(rec.diagnosis.loop_failure_time);
        }
        os << "\n";
    }
    for (const auto& r : res.reports) {
        os << (r.pass ? "  [pass] " : "  [FAIL] ") << r.bound_name << ": min slack "
           << g17(r.min_slack) << " at t = " << g17(r.worst_t) << "\n";
    }
    os << "exit: " << res.exit_code << "\n";
    return os.str();
}

}  // namespace smallgain
