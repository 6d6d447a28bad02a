#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "lbsim/gridrun.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spill(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"load-balancing simulator and bound evaluator"};
    app.require_subcommand(1);

    std::string config_path, out_path, assert_flag;
    std::int64_t seed = -1, trials = -1, jobs = -1;
    int parallelism = -1;

    CLI::App* run = app.add_subcommand("run", "run an experiment grid from a config file");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--seed", seed, "override root seed");
    run->add_option("--trials", trials, "override trials per cell");
    run->add_option("--jobs", jobs, "override jobs per trial");
    run->add_option("--out", out_path, "override CSV output path");
    run->add_option("--assert-invariants", assert_flag, "on|off")
        ->check(CLI::IsMember({"on", "off"}));
    run->add_option("--parallelism", parallelism, "worker threads");

    std::string br_config, br_out;
    CLI::App* br = app.add_subcommand("bound-report",
                                      "emit analytic bound and M/G/1 baselines per rho");
    br->add_option("--config", br_config, "JSON config file")->required();
    br->add_option("--out", br_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            lbsim::ExperimentGrid grid = lbsim::parse_grid_config(slurp(config_path));
            if (seed >= 0) grid.base.seed = static_cast<std::uint64_t>(seed);
            if (trials >= 0) grid.base.trials = static_cast<int>(trials);
            if (jobs >= 0) grid.base.jobs_per_trial = jobs;
            if (!assert_flag.empty()) grid.base.assert_invariants = assert_flag == "on";
            if (parallelism > 0) grid.base.parallelism = parallelism;
            if (!out_path.empty()) grid.out_csv = out_path;

            auto results = lbsim::run_grid(grid);
            std::string csv = lbsim::results_csv(results);
            if (grid.out_csv.empty())
                std::cout << csv;
            else
                spill(grid.out_csv, csv);
            if (!grid.out_json.empty())
                spill(grid.out_json, lbsim::sidecar_json(grid, results));
            for (const auto& cell : results)
                if (!cell.error.empty())
                    std::cerr << "cell " << cell.policy_name << " rho=" << cell.config.rho
                              << ": " << cell.error << "\n";
            return lbsim::exit_code_for(results);
        }
        if (br->parsed()) {
            std::string csv = lbsim::bound_report_csv(slurp(br_config));
            if (br_out.empty())
                std::cout << csv;
            else
                spill(br_out, csv);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
