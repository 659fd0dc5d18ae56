#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "smallgain/pipeline.hpp"

namespace {

using namespace smallgain;

struct CommonArgs {
    std::string spec;
    std::string out_dir;
    std::string mode;
    double dt = 0;
    int grid = 0;
    double s_max = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("spec", args.spec, "spec file path or bundled name")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--mode", args.mode, "formula mode: literal|symmetric")
        ->check(CLI::IsMember({"literal", "symmetric"}));
    cmd->add_option("--dt", args.dt, "override scenario time step");
    cmd->add_option("--grid", args.grid, "override the condition grid size");
    cmd->add_option("--s-max", args.s_max, "override the certification range S_max");
}

int run(const CommonArgs& args, std::set<Stage> stages) {
    ProblemSpec spec = parse_spec(resolve_spec(args.spec));

    PipelineOptions opts;
    opts.stages = std::move(stages);
    if (!args.out_dir.empty()) {
        opts.out_dir = args.out_dir;
    } else {
        const char* root = std::getenv("SMALLGAIN_OUT_ROOT");
        opts.out_dir = std::filesystem::path(root ? root : "out") / spec.name;
    }
    if (!args.mode.empty()) {
        opts.mode_override = args.mode == "literal" ? FormulaMode::Literal : FormulaMode::Symmetric;
    }
    if (args.dt > 0) opts.dt_override = args.dt;
    if (args.grid > 0) opts.grid_override = args.grid;
    if (args.s_max > 0) opts.s_max_override = args.s_max;

    PipelineResult res = run_pipeline(spec, opts);
    std::cout << res.summary;
    std::cout << "artifacts in " << opts.out_dir.string() << "\n";
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"small-gain stability certification toolkit"};
    app.require_subcommand(1);

    CommonArgs certify_args, compose_args, simulate_args, verify_args, run_args;
    auto* certify = app.add_subcommand("certify", "check the small-gain condition and search multipliers");
    add_common(certify, certify_args);
    auto* compose = app.add_subcommand("compose", "certify, then assemble the gain certificate");
    add_common(compose, compose_args);
    auto* simulate = app.add_subcommand("simulate", "integrate the bundled scenarios");
    add_common(simulate, simulate_args);
    auto* verify = app.add_subcommand("verify", "full pipeline with bound verification");
    add_common(verify, verify_args);
    auto* runall = app.add_subcommand("run", "alias for verify: all stages");
    add_common(runall, run_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (certify->parsed()) return run(certify_args, {Stage::Certify});
        if (compose->parsed()) return run(compose_args, {Stage::Certify, Stage::Compose});
        if (simulate->parsed()) return run(simulate_args, {Stage::Simulate});
        if (verify->parsed())
            return run(verify_args, {Stage::Certify, Stage::Compose, Stage::Simulate, Stage::Verify});
        if (runall->parsed())
            return run(run_args, {Stage::Certify, Stage::Compose, Stage::Simulate, Stage::Verify});
    } catch (const SpecError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 3;
}
