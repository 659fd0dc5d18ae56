#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "smallgain/scenario.hpp"

namespace smallgain {

enum class Stage { Certify, Compose, Simulate, Verify };

struct PipelineOptions {
    std::set<Stage> stages = {Stage::Certify, Stage::Compose, Stage::Simulate, Stage::Verify};
    std::filesystem::path out_dir;
    std::optional<FormulaMode> mode_override;
    std::optional<double> dt_override;
    std::optional<int> grid_override;
    std::optional<double> s_max_override;
};

/// Exit codes: 0 all requested checks passed; 1 a verification failed;
/// 2 the small-gain condition is infeasible; 3 a spec/usage error.
struct PipelineResult {
    int exit_code = 0;
    bool feasible = false;
    std::optional<SmallGainWitness> witness;
    std::optional<Certificate> certificate;
    std::vector<std::pair<std::string, TrajectoryRecord>> trajectories;
    std::vector<VerificationReport> reports;
    std::vector<std::filesystem::path> artifacts;
    std::string summary;
};

/// Run the requested stages in order, writing artifacts into out_dir:
/// witness.json + margin.csv, certificate.json + beta_prime_{1,2}.csv,
/// traj_{scenario}.csv, verify_{bound}.json, summary.txt. The verify stage
/// requires certify+compose+simulate in the same run.
PipelineResult run_pipeline(const ProblemSpec& spec, const PipelineOptions& opts);

/// Render the human-readable summary from a completed result.
std::string emit_report(const ProblemSpec& spec, const PipelineResult& result);

}  // namespace smallgain
