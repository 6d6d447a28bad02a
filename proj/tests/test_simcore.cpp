#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "lbsim/analytic.hpp"
#include "lbsim/simcore.hpp"

using namespace lbsim;

namespace {

SimConfig base_config() {
    SimConfig cfg;
    cfg.k = 1;
    cfg.dist = SizeDistribution::exponential(1.0);
    cfg.rho = 0.5;
    cfg.policy = PolicySpec::random();
    cfg.scheduling = Discipline::Fcfs;
    cfg.jobs_per_trial = 100000;
    cfg.warmup_fraction = 0.2;
    cfg.seed = 1;
    return cfg;
}

}  // namespace

TEST_CASE("zero jobs produce empty stats") {
    SimConfig cfg = base_config();
    cfg.jobs_per_trial = 0;
    TrialRecord rec = run_trial(cfg, 1);
    CHECK(rec.completed == 0);
    CHECK(rec.mean_response == 0);
}

TEST_CASE("identical config and seed reproduce the trial bitwise") {
    SimConfig cfg = base_config();
    cfg.k = 4;
    cfg.policy = PolicySpec::jsq_d(2);
    cfg.scheduling = Discipline::Srpt;
    cfg.guarded = true;
    cfg.jobs_per_trial = 50000;
    TrialRecord a = run_trial(cfg, 7);
    TrialRecord b = run_trial(cfg, 7);
    CHECK(a.decision_trace_hash == b.decision_trace_hash);
    CHECK(a.mean_response == b.mean_response);
    CHECK(a.completed == b.completed);
    CHECK(a.time_avg_jobs_in_system == b.time_avg_jobs_in_system);
    TrialRecord c = run_trial(cfg, 8);
    CHECK(a.decision_trace_hash != c.decision_trace_hash);
}

TEST_CASE("m/m/1 fcfs mean response hits 1/(1-rho) within 3%" * doctest::timeout(300)) {
    SimConfig cfg = base_config();
    cfg.jobs_per_trial = 1000000;
    TrialRecord rec = run_trial(cfg, 11);
    // k=1: speed-1 server; E[T] = 1/(1-rho) = 2
    CHECK(rec.mean_response == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("speed-1/k convention: sole job takes kx to finish") {
    SimConfig cfg = base_config();
    cfg.k = 10;
    cfg.dist = SizeDistribution::deterministic(1.0);
    cfg.rho = 0.01;  // essentially no queueing
    cfg.policy = PolicySpec::jsq();
    cfg.jobs_per_trial = 1000;
    cfg.warmup_fraction = 0;
    TrialRecord rec = run_trial(cfg, 3);
    CHECK(rec.mean_response == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("little's law and pasta on a long run" * doctest::timeout(300)) {
    SimConfig cfg = base_config();
    cfg.jobs_per_trial = 1000000;
    cfg.scheduling = Discipline::Srpt;
    TrialRecord rec = run_trial(cfg, 13);
    double lambda = cfg.arrival_rate();
    CHECK(rec.time_avg_jobs_in_system ==
          doctest::Approx(lambda * rec.mean_response).epsilon(0.02));
    CHECK(rec.arrival_avg_jobs_in_system ==
          doctest::Approx(rec.time_avg_jobs_in_system).epsilon(0.02));
}

TEST_CASE("warmup accounting") {
    SimConfig cfg = base_config();
    cfg.jobs_per_trial = 10000;
    cfg.warmup_fraction = 0.25;
    TrialRecord rec = run_trial(cfg, 5);
    CHECK(rec.completed == 7500);
    cfg.trials = 4;
    RunStats stats = run_experiment(cfg);
    CHECK(stats.completed == 4 * 7500);
    CHECK(stats.trials.size() == 4);
    CHECK(stats.trials[0].seed == cfg.seed);
    CHECK(stats.trials[3].seed == cfg.seed + 3);
}

TEST_CASE("guarded run with g = infinity matches the unguarded trace") {
    SimConfig cfg = base_config();
    cfg.k = 10;
    cfg.dist = SizeDistribution::bimodal(1, 1000, 0.9995);
    cfg.rho = 0.9;
    cfg.policy = PolicySpec::lwl();
    cfg.scheduling = Discipline::Srpt;
    cfg.jobs_per_trial = 30000;
    cfg.guarded = false;
    TrialRecord plain = run_trial(cfg, 21);
    cfg.guarded = true;
    cfg.g = std::numeric_limits<double>::infinity();
    TrialRecord inf_g = run_trial(cfg, 21);
    CHECK(plain.decision_trace_hash == inf_g.decision_trace_hash);
    CHECK(plain.mean_response == inf_g.mean_response);
}

TEST_CASE("guarded runs keep tightness at every event" * doctest::timeout(300)) {
    for (auto kind : {PolicyKind::Random, PolicyKind::Lwl, PolicyKind::SitaE}) {
        SimConfig cfg = base_config();
        cfg.k = 10;
        cfg.dist = SizeDistribution::bounded_pareto(1.5, 1, 1e6);
        cfg.rho = 0.8;
        cfg.guarded = true;
        cfg.g = 1;
        cfg.scheduling = Discipline::Srpt;
        cfg.assert_invariants = true;
        cfg.jobs_per_trial = 100000;
        switch (kind) {
            case PolicyKind::Random: cfg.policy = PolicySpec::random(); break;
            case PolicyKind::Lwl: cfg.policy = PolicySpec::lwl(); break;
            default:
                cfg.policy = PolicySpec::sita_e(cfg.dist, cfg.arrival_rate(), cfg.k);
        }
        TrialRecord rec = run_trial(cfg, 31);
        CHECK(rec.tightness_violations == 0);
        CHECK(rec.max_tightness_violation == 0.0);
        CHECK(rec.resets_direct > 0);
    }
}

TEST_CASE("work-balance probe stays within the rank spread limit" *
          doctest::timeout(300)) {
    SimConfig cfg = base_config();
    cfg.k = 10;
    cfg.dist = SizeDistribution::bimodal(1, 1000, 0.9995);
    cfg.rho = 0.8;
    cfg.guarded = true;
    cfg.g = 1;
    cfg.policy = PolicySpec::lwl();
    cfg.scheduling = Discipline::Prio;
    cfg.assert_invariants = true;
    cfg.jobs_per_trial = 100000;
    TrialRecord rec = run_trial(cfg, 37);
    CHECK(rec.balance_violations == 0);
    CHECK(!rec.max_work_imbalance_by_rank.empty());
    // the probe actually observed nonzero imbalance somewhere
    double worst = 0;
    for (auto& [r, v] : rec.max_work_imbalance_by_rank) worst = std::max(worst, v);
    CHECK(worst > 0);
}

TEST_CASE("single server: probe and violations trivially zero") {
    SimConfig cfg = base_config();
    cfg.guarded = true;
    cfg.scheduling = Discipline::Prio;
    cfg.assert_invariants = true;
    cfg.jobs_per_trial = 20000;
    TrialRecord rec = run_trial(cfg, 41);
    CHECK(rec.balance_violations == 0);
    for (auto& [r, v] : rec.max_work_imbalance_by_rank) CHECK(v == 0.0);
}

TEST_CASE("run_experiment: parallel equals serial") {
    SimConfig cfg = base_config();
    cfg.k = 5;
    cfg.policy = PolicySpec::jsq();
    cfg.scheduling = Discipline::Srpt;
    cfg.jobs_per_trial = 20000;
    cfg.trials = 4;
    cfg.parallelism = 1;
    RunStats serial = run_experiment(cfg);
    cfg.parallelism = 4;
    RunStats parallel = run_experiment(cfg);
    CHECK(serial.mean_T == parallel.mean_T);
    CHECK(serial.ci_halfwidth_95 == parallel.ci_halfwidth_95);
    for (int i = 0; i < 4; ++i)
        CHECK(serial.trials[i].decision_trace_hash == parallel.trials[i].decision_trace_hash);
}

TEST_CASE("mean_ci_95 basics") {
    std::vector<double> same = {3.0, 3.0, 3.0, 3.0};
    MeanCi ci = mean_ci_95(same);
    CHECK(ci.mean == 3.0);
    CHECK(ci.halfwidth == 0.0);
    std::vector<double> two = {1.0, 3.0};
    ci = mean_ci_95(two);
    CHECK(ci.mean == 2.0);
    // sd = sqrt(2), se = 1, t_{.975, df=1} = 12.706
    CHECK(ci.halfwidth == doctest::Approx(12.706).epsilon(1e-3));
    CHECK(student_t_975(39) == doctest::Approx(2.0227).epsilon(5e-3));
    CHECK(student_t_975(1000) == doctest::Approx(1.96).epsilon(1e-2));
}

TEST_CASE("instability sentinel aborts with the offending seed" * doctest::timeout(600)) {
    // SITA-E computes load-equalizing cutoffs, so pinning most capacity on
    // one server overloads the other: the in-system count must blow past the
    // sentinel.
    SimConfig cfg = base_config();
    cfg.k = 2;
    cfg.speeds = {0.98, 0.02};
    cfg.dist = SizeDistribution::exponential(1.0);
    cfg.rho = 0.9;
    cfg.policy = PolicySpec::sita_e(cfg.dist, cfg.arrival_rate(), 2);
    cfg.scheduling = Discipline::Srpt;
    cfg.jobs_per_trial = 8000000;
    bool aborted = false;
    try {
        run_trial(cfg, 99);
    } catch (const TrialAbort& e) {
        aborted = true;
        CHECK(e.seed == 99);
    }
    CHECK(aborted);
}

TEST_CASE("heterogeneous speeds: guarded run keeps time-unit tightness") {
    SimConfig cfg = base_config();
    cfg.k = 3;
    cfg.speeds = {0.5, 0.3, 0.2};
    cfg.dist = SizeDistribution::exponential(1.0);
    cfg.rho = 0.7;
    cfg.guarded = true;
    cfg.g = 1;
    cfg.policy = PolicySpec::lwl();
    cfg.scheduling = Discipline::Srpt;
    cfg.assert_invariants = true;
    cfg.jobs_per_trial = 50000;
    TrialRecord rec = run_trial(cfg, 43);
    CHECK(rec.tightness_violations == 0);
    CHECK(rec.completed > 0);
}

TEST_CASE("config validation names the offending field") {
    SimConfig cfg = base_config();
    cfg.rho = 1.5;
    CHECK_THROWS_WITH_AS(cfg.validate(), "sim: rho must be in (0,1)", std::invalid_argument);
    cfg = base_config();
    cfg.jobs_per_trial = 5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config();
    cfg.warmup_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config();
    cfg.speeds = {0.5};
    cfg.k = 2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("paired comparisons: policy change leaves the size stream intact") {
    SimConfig cfg = base_config();
    cfg.k = 4;
    cfg.scheduling = Discipline::Srpt;
    cfg.jobs_per_trial = 5000;
    cfg.policy = PolicySpec::jsq();
    TrialRecord jsq = run_trial(cfg, 17);
    cfg.policy = PolicySpec::lwl();
    TrialRecord lwl = run_trial(cfg, 17);
    // different decisions but identical workload: completed counts match and
    // per-rank response counts cover the same ranks
    CHECK(jsq.completed == lwl.completed);
    CHECK(jsq.decision_trace_hash != lwl.decision_trace_hash);
    CHECK(jsq.rank_response_count == lwl.rank_response_count);
}
