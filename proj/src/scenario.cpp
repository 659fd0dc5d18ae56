#include "smallgain/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smallgain/grammar.hpp"

#ifndef SMALLGAIN_SPEC_DIR
#define SMALLGAIN_SPEC_DIR ""
#endif

namespace smallgain {

using nlohmann::json;

namespace {

std::string render_issues(const std::vector<std::pair<std::string, std::string>>& issues) {
    std::ostringstream os;
    os << "spec validation failed (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s") << "):";
    for (const auto& [path, msg] : issues) os << "\n  " << path << ": " << msg;
    return os.str();
}

}  // namespace

SpecError::SpecError(std::vector<std::pair<std::string, std::string>> iss)
    : Error(render_issues(iss)), issues(std::move(iss)) {}

SubsystemDynamics DynamicsSpec::instantiate() const {
    SubsystemDynamics dyn;
    dyn.dims = dims;
    dyn.y_other_dim = y_other_dim;
    dyn.feedthrough = feedthrough;

    switch (kind) {
        case Kind::Linear: {
            auto A_ = A, By_ = B_y, Bu_ = B_u, C_ = C, Dy_ = D_y, Du_ = D_u;
            dyn.f = [A_, By_, Bu_](std::span<const double> x, std::span<const double> yo,
                                   std::span<const double> u, std::span<double> out) {
                for (size_t i = 0; i < A_.size(); ++i) {
                    double v = 0;
                    for (size_t j = 0; j < A_[i].size(); ++j) v += A_[i][j] * x[j];
                    for (size_t j = 0; j < By_[i].size(); ++j) v += By_[i][j] * yo[j];
                    for (size_t j = 0; j < Bu_[i].size(); ++j) v += Bu_[i][j] * u[j];
                    out[i] = v;
                }
            };
            dyn.h = [C_, Dy_, Du_](std::span<const double> x, std::span<const double> yo,
                                   std::span<const double> u, std::span<double> out) {
                for (size_t i = 0; i < C_.size(); ++i) {
                    double v = 0;
                    for (size_t j = 0; j < C_[i].size(); ++j) v += C_[i][j] * x[j];
                    for (size_t j = 0; j < Dy_[i].size(); ++j) v += Dy_[i][j] * yo[j];
                    for (size_t j = 0; j < Du_[i].size(); ++j) v += Du_[i][j] * u[j];
                    out[i] = v;
                }
            };
            break;
        }
        case Kind::Polynomial: {
            auto eval_terms = [](const std::vector<Term>& terms, double x, double y, double u) {
                double v = 0;
                for (const auto& t : terms) {
                    double m = t.c;
                    for (int i = 0; i < t.x; ++i) m *= x;
                    for (int i = 0; i < t.y; ++i) m *= y;
                    for (int i = 0; i < t.u; ++i) m *= u;
                    v += m;
                }
                return v;
            };
            auto ft = f_terms, ht = h_terms;
            dyn.f = [ft, eval_terms](std::span<const double> x, std::span<const double> yo,
                                     std::span<const double> u, std::span<double> out) {
                out[0] = eval_terms(ft, x[0], yo.empty() ? 0 : yo[0], u.empty() ? 0 : u[0]);
            };
            dyn.h = [ht, eval_terms](std::span<const double> x, std::span<const double> yo,
                                     std::span<const double> u, std::span<double> out) {
                out[0] = eval_terms(ht, x[0], yo.empty() ? 0 : yo[0], u.empty() ? 0 : u[0]);
            };
            break;
        }
        case Kind::SaturatingCoupling: {
            double a = sat_a, b = sat_b, c = sat_c;
            dyn.f = [a, b, c](std::span<const double> x, std::span<const double> yo,
                              std::span<const double> u, std::span<double> out) {
                double y = yo.empty() ? 0 : yo[0];
                out[0] = a * x[0] + b * y / (1.0 + std::abs(y)) + c * (u.empty() ? 0 : u[0]);
            };
            dyn.h = [](std::span<const double> x, std::span<const double>, std::span<const double>,
                       std::span<double> out) { out[0] = x[0]; };
            break;
        }
    }
    return dyn;
}

namespace {

class SpecReader {
public:
    explicit SpecReader(const json& j, std::string origin) : root_(j), origin_(std::move(origin)) {}

    ProblemSpec read() {
        ProblemSpec spec;
        spec.name = str_at(root_, "name", "name");
        if (!root_.contains("subsystems") || !root_["subsystems"].is_array() ||
            root_["subsystems"].size() != 2) {
            issue("subsystems", "expected an array of exactly two subsystems");
            throw SpecError(std::move(issues_));
        }
        read_certification(spec);
        read_subsystem(root_["subsystems"][0], "subsystems[0]", spec.dyn1, spec.con1, spec.iss1, spec.cert.s_max);
        read_subsystem(root_["subsystems"][1], "subsystems[1]", spec.dyn2, spec.con2, spec.iss2, spec.cert.s_max);
        spec.dyn1.y_other_dim = spec.dyn2.dims.output;
        spec.dyn2.y_other_dim = spec.dyn1.dims.output;
        cross_check_dims(spec);
        read_scenarios(spec);
        if (!issues_.empty()) throw SpecError(std::move(issues_));
        return spec;
    }

private:
    void issue(const std::string& path, const std::string& msg) { issues_.emplace_back(path, msg); }

    std::string str_at(const json& j, const char* key, const std::string& path) {
        if (!j.contains(key) || !j[key].is_string()) {
            issue(path, "missing or non-string field");
            return "";
        }
        return j[key].get<std::string>();
    }

    double num_at(const json& j, const char* key, const std::string& path, double fallback,
                  bool required = false) {
        if (!j.contains(key)) {
            if (required) issue(path, "missing numeric field");
            return fallback;
        }
        if (!j[key].is_number()) {
            issue(path, "expected a number");
            return fallback;
        }
        return j[key].get<double>();
    }

    ScalarFn fn_at(const json& j, const char* key, const std::string& path, double cap,
                   bool require_class_k) {
        if (!j.contains(key) || !j[key].is_string()) {
            issue(path, "missing function-grammar string");
            return ScalarFn::zero(cap);
        }
        std::string text = j[key].get<std::string>();
        try {
            ScalarFn f = parse_scalar_fn(text, cap);
            ClassReport rep = classify(f);
            if (require_class_k) {
                if (!rep.zero_at_zero) {
                    issue(path, "class-check failure: zero_at_zero violated by \"" + text + "\"");
                } else if (!rep.strictly_increasing && !f.is_zero()) {
                    issue(path, "class-check failure: not strictly increasing: \"" + text + "\"");
                }
                if (f.fn_class() == FnClass::Kinf && !rep.unbounded) {
                    issue(path, "class-check failure: Kinf declared but growth heuristic failed");
                }
            }
            return f;
        } catch (const ParseError& e) {
            issue(path, std::string("parse error: ") + e.what());
            return ScalarFn::zero(cap);
        }
    }

    KLFn kl_at(const json& j, const char* key, const std::string& path, double cap) {
        if (!j.contains(key) || !j[key].is_object()) {
            issue(path, "missing KL bound object");
            return KLFn::exp_decay(1, 1, cap);
        }
        const json& b = j[key];
        std::string kind = str_at(b, "kind", path + ".kind");
        if (kind == "exp_decay") {
            double M = num_at(b, "M", path + ".M", 1, true);
            double lam = num_at(b, "lambda", path + ".lambda", 1, true);
            if (M <= 0 || lam <= 0) {
                issue(path, "exp_decay requires M > 0 and lambda > 0");
                return KLFn::exp_decay(1, 1, cap);
            }
            return KLFn::exp_decay(M, lam, cap);
        }
        if (kind == "scaled") {
            ScalarFn f = fn_at(b, "fn", path + ".fn", cap, true);
            double lam = num_at(b, "lambda", path + ".lambda", 1, true);
            if (lam <= 0) {
                issue(path, "scaled requires lambda > 0");
                return KLFn::exp_decay(1, 1, cap);
            }
            if (!is_class_k(f.fn_class())) f = f.with_class(FnClass::K);
            try {
                return KLFn::scaled(f, lam);
            } catch (const Error& e) {
                issue(path, e.what());
                return KLFn::exp_decay(1, 1, cap);
            }
        }
        issue(path + ".kind", "unknown KL family '" + kind + "' (expected exp_decay or scaled)");
        return KLFn::exp_decay(1, 1, cap);
    }

    std::vector<std::vector<double>> matrix_at(const json& j, const char* key, const std::string& path,
                                               int rows, int cols) {
        std::vector<std::vector<double>> m(std::max(rows, 0), std::vector<double>(std::max(cols, 0), 0.0));
        if (!j.contains(key)) {
            issue(path, "missing matrix");
            return m;
        }
        const json& v = j[key];
        if (!v.is_array() || static_cast<int>(v.size()) != rows) {
            issue(path, "expected " + std::to_string(rows) + " rows");
            return m;
        }
        for (int i = 0; i < rows; ++i) {
            if (!v[i].is_array() || static_cast<int>(v[i].size()) != cols) {
                issue(path + "[" + std::to_string(i) + "]", "expected " + std::to_string(cols) + " columns");
                continue;
            }
            for (int c = 0; c < cols; ++c) {
                if (!v[i][c].is_number()) {
                    issue(path, "non-numeric entry");
                    continue;
                }
                m[i][c] = v[i][c].get<double>();
            }
        }
        return m;
    }

    void read_certification(ProblemSpec& spec) {
        if (!root_.contains("certification")) return;
        const json& c = root_["certification"];
        spec.cert.s_l = num_at(c, "s_l", "certification.s_l", 0);
        spec.cert.s_max = num_at(c, "S_max", "certification.S_max", kDefaultCap);
        if (spec.cert.s_l < 0) issue("certification.s_l", "must be nonnegative");
        if (spec.cert.s_max <= spec.cert.s_l) issue("certification.S_max", "must exceed s_l");
        if (c.contains("c_grid")) {
            spec.cert.c_grid.clear();
            for (const auto& v : c["c_grid"]) {
                if (!v.is_number() || v.get<double>() <= 0) {
                    issue("certification.c_grid", "entries must be positive numbers");
                    continue;
                }
                spec.cert.c_grid.push_back(v.get<double>());
            }
            if (spec.cert.c_grid.empty()) issue("certification.c_grid", "must be non-empty");
        }
        if (c.contains("rho3")) spec.cert.rho3 = fn_at(c, "rho3", "certification.rho3", kComposeCap, true);
        if (c.contains("r3_1")) spec.cert.r3_1 = fn_at(c, "r3_1", "certification.r3_1", kComposeCap, true);
        if (c.contains("mode")) {
            std::string m = str_at(c, "mode", "certification.mode");
            if (m == "literal")
                spec.cert.mode = FormulaMode::Literal;
            else if (m == "symmetric")
                spec.cert.mode = FormulaMode::Symmetric;
            else
                issue("certification.mode", "expected 'literal' or 'symmetric'");
        }
        spec.cert.condition_grid_n =
            static_cast<int>(num_at(c, "grid_n", "certification.grid_n", 2048));
    }

    void read_subsystem(const json& j, const std::string& path, DynamicsSpec& dyn,
                        SubsystemContract& con, std::optional<IssContract>& iss, double s_max) {
        if (!j.contains("dynamics") || !j["dynamics"].is_object()) {
            issue(path + ".dynamics", "missing");
            return;
        }
        const json& d = j["dynamics"];
        std::string kind = str_at(d, "kind", path + ".dynamics.kind");
        if (kind == "linear") {
            dyn.kind = DynamicsSpec::Kind::Linear;
            int n = 0, p = 0, m = 0, po = 0;
            if (d.contains("A") && d["A"].is_array()) n = static_cast<int>(d["A"].size());
            if (d.contains("C") && d["C"].is_array()) p = static_cast<int>(d["C"].size());
            if (d.contains("B_u") && d["B_u"].is_array() && !d["B_u"].empty() && d["B_u"][0].is_array())
                m = static_cast<int>(d["B_u"][0].size());
            if (d.contains("B_y") && d["B_y"].is_array() && !d["B_y"].empty() && d["B_y"][0].is_array())
                po = static_cast<int>(d["B_y"][0].size());
            if (n <= 0) issue(path + ".dynamics.A", "state dimension must be positive");
            if (p <= 0) issue(path + ".dynamics.C", "output dimension must be positive");
            dyn.dims = Dims{n, std::max(m, 0), p};
            dyn.A = matrix_at(d, "A", path + ".dynamics.A", n, n);
            dyn.B_y = matrix_at(d, "B_y", path + ".dynamics.B_y", n, po);
            dyn.B_u = matrix_at(d, "B_u", path + ".dynamics.B_u", n, m);
            dyn.C = matrix_at(d, "C", path + ".dynamics.C", p, n);
            dyn.D_y = matrix_at(d, "D_y", path + ".dynamics.D_y", p, po);
            dyn.D_u = matrix_at(d, "D_u", path + ".dynamics.D_u", p, m);
            dyn.feedthrough = false;
            for (const auto& row : dyn.D_y)
                for (double v : row)
                    if (v != 0.0) dyn.feedthrough = true;
        } else if (kind == "poly") {
            dyn.kind = DynamicsSpec::Kind::Polynomial;
            dyn.dims = Dims{1, 1, 1};
            auto read_terms = [&](const char* key, std::vector<DynamicsSpec::Term>& out) {
                if (!d.contains(key) || !d[key].is_array()) {
                    issue(path + ".dynamics." + key, "missing term list");
                    return;
                }
                for (const auto& t : d[key]) {
                    DynamicsSpec::Term term;
                    term.c = t.value("c", 0.0);
                    term.x = t.value("x", 0);
                    term.y = t.value("y", 0);
                    term.u = t.value("u", 0);
                    if (term.x < 0 || term.y < 0 || term.u < 0 || term.x + term.y + term.u > 5) {
                        issue(path + ".dynamics." + key, "term degrees must be in [0, 5]");
                        continue;
                    }
                    out.push_back(term);
                }
            };
            read_terms("f_terms", dyn.f_terms);
            read_terms("h_terms", dyn.h_terms);
            for (const auto& t : dyn.h_terms)
                if (t.y > 0) dyn.feedthrough = true;
        } else if (kind == "sat_coupling") {
            dyn.kind = DynamicsSpec::Kind::SaturatingCoupling;
            dyn.dims = Dims{1, 1, 1};
            dyn.sat_a = num_at(d, "a", path + ".dynamics.a", -1, true);
            dyn.sat_b = num_at(d, "b", path + ".dynamics.b", 1, true);
            dyn.sat_c = num_at(d, "c", path + ".dynamics.c", 1, true);
            dyn.feedthrough = false;
        } else {
            issue(path + ".dynamics.kind", "unknown kind '" + kind + "'");
        }

        if (!j.contains("contract") || !j["contract"].is_object()) {
            issue(path + ".contract", "missing");
            return;
        }
        const json& c = j["contract"];
        con.beta = kl_at(c, "beta", path + ".contract.beta", s_max);
        con.gamma_y = fn_at(c, "gamma_y", path + ".contract.gamma_y", s_max, true);
        con.gamma_u = fn_at(c, "gamma_u", path + ".contract.gamma_u", s_max, true);
        con.d = num_at(c, "d", path + ".contract.d", 0);
        con.alpha0 = fn_at(c, "alpha0", path + ".contract.alpha0", s_max, true);
        con.D0 = num_at(c, "D0", path + ".contract.D0", 0);
        if (con.d < 0) issue(path + ".contract.d", "must be nonnegative");
        if (con.D0 < 0) issue(path + ".contract.D0", "must be nonnegative");
        con.state_dim = dyn.dims.state;
        con.input_dim = dyn.dims.input;
        con.output_dim = dyn.dims.output;

        if (j.contains("iss")) {
            const json& s = j["iss"];
            IssContract ic;
            ic.beta_x = kl_at(s, "beta_x", path + ".iss.beta_x", s_max);
            ic.gamma_xy = fn_at(s, "gamma_xy", path + ".iss.gamma_xy", s_max, true);
            ic.gamma_xu = fn_at(s, "gamma_xu", path + ".iss.gamma_xu", s_max, true);
            iss = ic;
        }
    }

    void cross_check_dims(ProblemSpec& spec) {
        if (spec.dyn1.kind == DynamicsSpec::Kind::Linear &&
            !spec.dyn1.B_y.empty() && !spec.dyn1.B_y[0].empty() &&
            static_cast<int>(spec.dyn1.B_y[0].size()) != spec.dyn2.dims.output) {
            issue("subsystems[0].dynamics.B_y",
                  "coupling width " + std::to_string(spec.dyn1.B_y[0].size()) +
                      " does not match subsystems[1] output dim " +
                      std::to_string(spec.dyn2.dims.output));
        }
        if (spec.dyn2.kind == DynamicsSpec::Kind::Linear &&
            !spec.dyn2.B_y.empty() && !spec.dyn2.B_y[0].empty() &&
            static_cast<int>(spec.dyn2.B_y[0].size()) != spec.dyn1.dims.output) {
            issue("subsystems[1].dynamics.B_y",
                  "coupling width " + std::to_string(spec.dyn2.B_y[0].size()) +
                      " does not match subsystems[0] output dim " +
                      std::to_string(spec.dyn1.dims.output));
        }
    }

    InputSignal input_at(const json& j, const std::string& path) {
        InputSignal sig;
        std::string kind = str_at(j, "kind", path + ".kind");
        if (kind == "constant") {
            sig = InputSignal::constant(num_at(j, "amplitude", path + ".amplitude", 0, true));
        } else if (kind == "step") {
            sig = InputSignal::step(num_at(j, "t0", path + ".t0", 0),
                                    num_at(j, "amplitude", path + ".amplitude", 0, true));
        } else if (kind == "sinusoid") {
            sig = InputSignal::sinusoid(num_at(j, "amplitude", path + ".amplitude", 0, true),
                                        num_at(j, "omega", path + ".omega", 1, true));
        } else if (kind == "pwc") {
            std::vector<std::pair<double, double>> table;
            if (j.contains("table") && j["table"].is_array()) {
                for (const auto& row : j["table"]) {
                    if (row.is_array() && row.size() == 2 && row[0].is_number() && row[1].is_number()) {
                        table.emplace_back(row[0].get<double>(), row[1].get<double>());
                    } else {
                        issue(path + ".table", "rows must be [t, value] pairs");
                    }
                }
            } else {
                issue(path + ".table", "missing");
            }
            sig = InputSignal::piecewise(std::move(table));
        } else {
            issue(path + ".kind", "unknown input kind '" + kind + "'");
        }
        return sig;
    }

    void read_scenarios(ProblemSpec& spec) {
        if (!root_.contains("scenarios") || !root_["scenarios"].is_array()) {
            issue("scenarios", "missing scenario list");
            return;
        }
        int idx = 0;
        for (const auto& s : root_["scenarios"]) {
            std::string path = "scenarios[" + std::to_string(idx++) + "]";
            ScenarioSpec sc;
            sc.name = str_at(s, "name", path + ".name");
            sc.T = num_at(s, "T", path + ".T", 10, true);
            sc.dt = num_at(s, "dt", path + ".dt", 1e-3);
            if (sc.dt <= 0 || sc.T < sc.dt) issue(path, "requires dt > 0 and T >= dt");
            int n_total = spec.dyn1.dims.state + spec.dyn2.dims.state;
            if (s.contains("x0") && s["x0"].is_array()) {
                for (const auto& v : s["x0"]) sc.x0.push_back(v.is_number() ? v.get<double>() : 0.0);
            }
            if (static_cast<int>(sc.x0.size()) != n_total) {
                issue(path + ".x0", "expected " + std::to_string(n_total) + " stacked entries, got " +
                                        std::to_string(sc.x0.size()));
            }
            int m_total = spec.dyn1.dims.input + spec.dyn2.dims.input;
            if (s.contains("inputs") && s["inputs"].is_array()) {
                int ch = 0;
                for (const auto& in : s["inputs"]) {
                    InputSignal sig = input_at(in, path + ".inputs[" + std::to_string(ch) + "]");
                    if (ch < spec.dyn1.dims.input)
                        sc.inputs1.push_back(sig);
                    else
                        sc.inputs2.push_back(sig);
                    ++ch;
                }
                if (ch != m_total) {
                    issue(path + ".inputs", "expected " + std::to_string(m_total) +
                                                " stacked channels, got " + std::to_string(ch));
                }
            } else {
                sc.inputs1.assign(spec.dyn1.dims.input, InputSignal::constant(0));
                sc.inputs2.assign(spec.dyn2.dims.input, InputSignal::constant(0));
            }
            spec.scenarios.push_back(std::move(sc));
        }
        if (spec.scenarios.empty()) issue("scenarios", "at least one scenario is required");
    }

    const json& root_;
    std::string origin_;
    std::vector<std::pair<std::string, std::string>> issues_;
};

}  // namespace

ProblemSpec parse_spec_text(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw SpecError({{origin, std::string("JSON parse error: ") + e.what()}});
    }
    return SpecReader(j, origin).read();
}

ProblemSpec parse_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SpecError({{path.string(), "cannot open spec file"}});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec_text(ss.str(), path.string());
}

std::filesystem::path resolve_spec(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (fs::exists(name_or_path)) return name_or_path;
    std::vector<fs::path> roots;
    if (const char* env = std::getenv("SMALLGAIN_SPEC_DIR")) roots.emplace_back(env);
    if (*SMALLGAIN_SPEC_DIR) roots.emplace_back(SMALLGAIN_SPEC_DIR);
    roots.emplace_back("specs");
    for (const auto& root : roots) {
        fs::path p = root / (name_or_path + ".json");
        if (fs::exists(p)) return p;
        p = root / name_or_path;
        if (fs::exists(p)) return p;
    }
    throw SpecError({{name_or_path, "spec not found as a path or bundled name"}});
}

std::vector<std::string> bundled_spec_names() {
    return {"linear_canonical", "unity_loop", "diverging_loop", "saturating_sl", "ios_case"};
}

}  // namespace smallgain
