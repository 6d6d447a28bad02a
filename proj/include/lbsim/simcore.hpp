#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbsim/netsim.hpp"
#include "lbsim/policy.hpp"
#include "lbsim/server.hpp"
#include "lbsim/sizedist.hpp"

namespace lbsim {

struct DelaySpec {
    enum class Kind { Deterministic, Exponential } kind = Kind::Deterministic;
    double value = 0;  // fixed delay, or mean of the exponential delay
};

struct SimConfig {
    int k = 10;
    SizeDistribution dist = SizeDistribution::exponential(1.0);
    double rho = 0.5;
    PolicySpec policy = PolicySpec::random();
    bool guarded = false;
    double g = 1.0;  // +inf sentinel: guardrails carried but never restrict
    Discipline scheduling = Discipline::Srpt;
    int trials = 1;
    std::int64_t jobs_per_trial = 100000;
    double warmup_fraction = 0.2;
    std::uint64_t seed = 1;
    int dispatchers = 1;
    // Set: engage the reset-message protocol with this delay law.
    // Unset: servers reset dispatcher state directly on emptying.
    std::optional<DelaySpec> reset_delay;
    bool resets_enabled = true;
    std::vector<double> speeds;  // empty: homogeneous 1/k each
    bool assert_invariants = false;
    int parallelism = 1;  // trial-level threads in run_experiment

    void validate() const;
    double rank_width_value() const;  // c, from rho, fixed for the whole run
    double total_speed() const;
    double arrival_rate() const;  // lambda = rho * total_speed / E[X]
};

// Raised when the in-system job count exceeds the instability sentinel.
struct TrialAbort : std::runtime_error {
    std::uint64_t seed;
    TrialAbort(std::uint64_t s, const std::string& what)
        : std::runtime_error(what), seed(s) {}
};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::int64_t completed = 0;  // post-warmup completions
    double mean_response = 0;
    std::map<int, double> rank_response_sum;
    std::map<int, std::int64_t> rank_response_count;

    std::int64_t tightness_violations = 0;
    double max_tightness_violation = 0;  // worst spread minus limit, 0 if none
    std::int64_t global_tightness_violations = 0;  // summed across dispatchers, limit d*g
    std::int64_t balance_violations = 0;
    std::map<int, double> max_work_imbalance_by_rank;
    std::int64_t protocol_violations = 0;  // reset applied while unsafe

    std::int64_t resets_direct = 0;
    std::int64_t resets_applied = 0;
    std::int64_t resets_ignored = 0;

    double time_avg_jobs_in_system = 0;     // post-warmup window
    double arrival_avg_jobs_in_system = 0;  // sampled at post-warmup arrivals
    double duration = 0;                    // post-warmup window length
    std::uint64_t decision_trace_hash = 0;  // order-sensitive (job id, server)
};

struct RunStats {
    double mean_T = 0;
    double ci_halfwidth_95 = 0;  // Student-t over trial means
    std::map<int, double> per_rank_mean_T;
    std::int64_t completed = 0;
    double max_tightness_violation = 0;
    std::map<int, double> max_work_imbalance_by_rank;
    std::int64_t violations = 0;  // tightness + balance + protocol, all trials
    std::int64_t resets_applied = 0;
    std::int64_t resets_ignored = 0;
    std::vector<TrialRecord> trials;
};

TrialRecord run_trial(const SimConfig& config, std::uint64_t seed);
// Runs config.trials trials on seeds seed+0 .. seed+trials-1 (in parallel up
// to config.parallelism) and aggregates. Trial aborts propagate with the
// offending seed.
RunStats run_experiment(const SimConfig& config);

// 97.5% Student-t quantile (two-sided 95% intervals).
double student_t_975(int df);
struct MeanCi {
    double mean = 0;
    double halfwidth = 0;
};
MeanCi mean_ci_95(std::span<const double> values);

}  // namespace lbsim
