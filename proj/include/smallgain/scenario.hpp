#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smallgain/gain_composer.hpp"
#include "smallgain/simulate.hpp"
#include "smallgain/small_gain.hpp"
#include "smallgain/verify.hpp"

namespace smallgain {

/// Structured spec validation failure: every offending field with its path.
struct SpecError : Error {
    explicit SpecError(std::vector<std::pair<std::string, std::string>> issues);
    std::vector<std::pair<std::string, std::string>> issues;  ///< (field path, message)
};

/// Parametric dynamics families the spec format can express.
struct DynamicsSpec {
    enum class Kind { Linear, Polynomial, SaturatingCoupling };

    Kind kind = Kind::Linear;
    Dims dims;
    int y_other_dim = 1;
    bool feedthrough = false;

    // Linear: xdot = A x + B_y y_other + B_u u; y = C x + D_y y_other + D_u u
    std::vector<std::vector<double>> A, B_y, B_u, C, D_y, D_u;

    // Polynomial (scalar subsystem): sums of c * x^a * y^b * u^g
    struct Term {
        double c = 0;
        int x = 0, y = 0, u = 0;
    };
    std::vector<Term> f_terms, h_terms;

    // SaturatingCoupling (scalar): xdot = a x + b y/(1+|y|) + c u; y = x
    double sat_a = -1, sat_b = 1, sat_c = 1;

    SubsystemDynamics instantiate() const;
};

struct ScenarioSpec {
    std::string name;
    std::vector<double> x0;
    std::vector<InputSignal> inputs1, inputs2;
    double T = 10;
    double dt = 1e-3;
};

struct CertificationSpec {
    double s_l = 0;
    double s_max = kDefaultCap;
    std::vector<double> c_grid = {0.25, 0.5, 1.0};
    ScalarFn rho3 = ScalarFn::identity(kComposeCap);
    ScalarFn r3_1 = ScalarFn::linear(0.1, kComposeCap);
    FormulaMode mode = FormulaMode::Symmetric;
    int condition_grid_n = 2048;
};

struct ProblemSpec {
    std::string name;
    DynamicsSpec dyn1, dyn2;
    SubsystemContract con1, con2;
    std::optional<IssContract> iss1, iss2;
    CertificationSpec cert;
    std::vector<ScenarioSpec> scenarios;
};

/// Parse and fully validate a problem spec file (JSON with embedded function
/// grammar). Collects all schema errors before failing.
ProblemSpec parse_spec(const std::filesystem::path& path);
ProblemSpec parse_spec_text(const std::string& json_text, const std::string& origin);

/// Resolve a CLI spec argument: an existing path wins, otherwise the name is
/// looked up in the bundled spec directory ($SMALLGAIN_SPEC_DIR or the
/// compiled-in default).
std::filesystem::path resolve_spec(const std::string& name_or_path);

std::vector<std::string> bundled_spec_names();

}  // namespace smallgain
