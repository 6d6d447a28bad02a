#pragma once

#include <map>
#include <string>
#include <vector>

#include "lbsim/simcore.hpp"

namespace lbsim {

// Policy named in a config; SITA-E cutoffs depend on (dist, lambda, k) so the
// concrete PolicySpec is built per grid cell.
struct PolicyChoice {
    PolicyKind kind = PolicyKind::Random;
    int d = 0;
    PolicySpec prepare(const SizeDistribution& dist, double lambda, int k) const;
    std::string name() const;
};
PolicyChoice policy_choice_from_string(const std::string& name);

struct ExperimentGrid {
    SimConfig base;
    PolicyChoice base_policy;
    // Sweep axes; empty axis means "use the base value".
    std::vector<double> rho_values;
    std::vector<PolicyChoice> policies;
    std::vector<int> guarded_values;  // 0/1
    std::vector<double> g_values;
    std::vector<Discipline> sched_values;
    std::string out_csv, out_json;
};

struct CellResult {
    SimConfig config;  // fully resolved
    std::string policy_name;
    double c = 0;
    RunStats stats;
    bool aborted = false;
    bool invalid = false;
    std::string error;
};

// Cells enumerated rho (outer) x policy x guarded x g x scheduling (inner);
// every cell runs on the same root seed so sweeps are paired comparisons.
std::vector<CellResult> run_grid(const ExperimentGrid& grid);

// One CSV row per cell, columns exactly:
// rho,k,dist,policy,guarded,g,c,scheduling,dispatchers,trials,jobs_per_trial,
// mean_T,ci95_halfwidth,completed,violations
// Numbers are printed with 17 significant digits so parsing the CSV back
// reproduces the in-memory values bit-exactly; aborted cells show "unstable".
std::string results_csv(const std::vector<CellResult>& results);

// Parsed CSV: one map column->token per row (header-driven).
std::vector<std::map<std::string, std::string>> parse_csv(const std::string& text);

// Config echo + per-cell seeds/rank width/invariant summary.
std::string sidecar_json(const ExperimentGrid& grid, const std::vector<CellResult>& results);

// Config file (JSON) -> grid. Throws std::invalid_argument naming the field
// on malformed input.
ExperimentGrid parse_grid_config(const std::string& json_text);

// Analytic bound/baseline table: one row per rho with mean_guarded_prio_bound
// and the single-server mean response formulas; simulated means appended when
// the config asks for simulation. Divergent values render as "unstable".
std::string bound_report_csv(const std::string& json_text);

int exit_code_for(const std::vector<CellResult>& results);

}  // namespace lbsim
