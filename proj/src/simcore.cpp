#include "lbsim/simcore.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <climits>
#include <cmath>
#include <limits>
#include <queue>
#include <thread>

#include "lbsim/guardrail.hpp"

namespace lbsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kInstabilityLimit = 1'000'000;
}  // namespace

void SimConfig::validate() const {
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("sim: rho must be in (0,1)");
    if (k < 1) throw std::invalid_argument("sim: k must be >= 1");
    if (jobs_per_trial != 0 && jobs_per_trial < 10 * static_cast<std::int64_t>(k))
        throw std::invalid_argument("sim: jobs_per_trial must be 0 or >= 10k");
    if (!(warmup_fraction >= 0 && warmup_fraction < 1))
        throw std::invalid_argument("sim: warmup_fraction must be in [0,1)");
    if (trials < 1) throw std::invalid_argument("sim: trials must be >= 1");
    if (dispatchers < 1) throw std::invalid_argument("sim: dispatchers must be >= 1");
    if (!speeds.empty() && static_cast<int>(speeds.size()) != k)
        throw std::invalid_argument("sim: speeds list must have k entries");
    for (double s : speeds)
        if (!(s > 0)) throw std::invalid_argument("sim: speeds must be positive");
    if (guarded && !(g >= 1)) throw std::invalid_argument("sim: tightness g must be >= 1");
    if (reset_delay && !(reset_delay->value >= 0))
        throw std::invalid_argument("sim: reset delay must be >= 0");
    policy.validate(k);
}

double SimConfig::rank_width_value() const { return rank_width(rho); }

double SimConfig::total_speed() const {
    if (speeds.empty()) return 1.0;
    double t = 0;
    for (double s : speeds) t += s;
    return t;
}

double SimConfig::arrival_rate() const { return rho * total_speed() / dist.mean(); }

namespace {

struct Event {
    double time;
    std::uint64_t seq;
    enum Kind : std::uint8_t { Arrival, Completion, ResetDelivery } kind;
    int server;
    std::uint64_t payload;  // Completion: server generation; ResetDelivery: message index
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

class Engine {
public:
    Engine(const SimConfig& cfg, std::uint64_t seed)
        : cfg_(cfg),
          seed_(seed),
          arrivals_(derive_stream(seed, StreamPurpose::Arrivals)),
          sizes_(derive_stream(seed, StreamPurpose::Sizes)),
          policy_rng_(derive_stream(seed, StreamPurpose::Policy)),
          routing_(derive_stream(seed, StreamPurpose::Routing)),
          delays_(derive_stream(seed, StreamPurpose::Delays)) {
        lambda_ = cfg.arrival_rate();
        c_ = cfg.rank_width_value();
        messages_on_ = cfg.guarded && cfg.resets_enabled && cfg.reset_delay.has_value();

        servers_.reserve(cfg.k);
        for (int s = 0; s < cfg.k; ++s) {
            double spd = cfg.speeds.empty() ? 1.0 / cfg.k : cfg.speeds[s];
            servers_.emplace_back(cfg.scheduling, spd);
        }
        if (cfg.guarded) {
            GuardrailConfig gc{cfg.g, c_, cfg.k, cfg.speeds};
            for (int d = 0; d < cfg.dispatchers; ++d) dispatchers_.emplace_back(d, gc);
        }
        server_digest_.assign(cfg.k, std::vector<std::uint64_t>(
                                         std::max(1, cfg.dispatchers), digest_init()));
        server_received_.assign(cfg.k,
                                std::vector<std::int64_t>(std::max(1, cfg.dispatchers), 0));
        remaining_obs_.assign(cfg.k, 0.0);
        count_obs_.assign(cfg.k, 0);
        last_dispatch_obs_.assign(cfg.k, 0.0);
        all_servers_.resize(cfg.k);
        for (int s = 0; s < cfg.k; ++s) all_servers_[s] = s;
        rec_.seed = seed;
        rec_.decision_trace_hash = digest_init();
    }

    TrialRecord run() {
        warmup_cutoff_ = static_cast<std::int64_t>(
            std::floor(cfg_.warmup_fraction * static_cast<double>(cfg_.jobs_per_trial)));
        if (cfg_.jobs_per_trial > 0) {
            push_event({arrivals_.next_exponential(1.0 / lambda_), seq_++, Event::Arrival, 0, 0});
            arrivals_scheduled_ = 1;
        }
        while (!calendar_.empty()) {
            Event ev = calendar_.top();
            calendar_.pop();
            advance_time(ev.time);
            switch (ev.kind) {
                case Event::Arrival: on_arrival(ev.time); break;
                case Event::Completion: on_completion(ev.time, ev.server, ev.payload); break;
                case Event::ResetDelivery: on_reset_delivery(ev.payload); break;
            }
        }
        finalize();
        return rec_;
    }

private:
    void push_event(Event ev) { calendar_.push(ev); }

    void advance_time(double t) {
        if (warmup_done_) time_n_accum_ += static_cast<double>(in_system_) * (t - clock_);
        clock_ = t;
    }

    void push_completion(int s, double now) {
        auto c = servers_[s].next_completion(now);
        assert(c.has_value());
        push_event({c->time, seq_++, Event::Completion, s, servers_[s].generation()});
    }

    void on_arrival(double now) {
        double x = cfg_.dist.sample(sizes_);
        int r = rank_of(x, c_);
        int d_id = cfg_.dispatchers > 1 ? route_arrival(cfg_.dispatchers, routing_) : 0;

        if (warmup_done_) {
            arrival_n_sum_ += static_cast<double>(in_system_);
            ++arrival_n_count_;
        }
        if (cfg_.assert_invariants && cfg_.guarded && cfg_.scheduling == Discipline::Prio &&
            cfg_.g != kInf)
            work_balance_probe(now);

        if (cfg_.guarded) {
            dispatchers_[d_id].guard.safe_set(x, candidates_);
        } else {
            candidates_ = all_servers_;
        }
        for (int s = 0; s < cfg_.k; ++s) {
            remaining_obs_[s] = servers_[s].total_remaining(now);
            count_obs_[s] = servers_[s].job_count();
        }
        ServerObservation obs{remaining_obs_, count_obs_, last_dispatch_obs_};
        int s = dispatch(cfg_.policy, x, candidates_, obs, policy_rng_, scratch_);

        std::uint64_t job_id = next_job_id_++;
        if (cfg_.guarded) {
            dispatchers_[d_id].guard.record_dispatch(s, x);
            if (cfg_.assert_invariants) {
                double excess = dispatchers_[d_id].guard.rank_tightness_excess(r);
                if (excess > 0) {
                    ++rec_.tightness_violations;
                    rec_.max_tightness_violation =
                        std::max(rec_.max_tightness_violation, excess);
                }
                if (cfg_.dispatchers > 1) global_rank_check(r);
            }
            dispatchers_[d_id].note_dispatch(s, job_id);
            server_digest_[s][d_id] = digest_update(server_digest_[s][d_id], job_id);
            ++server_received_[s][d_id];
        }
        rec_.decision_trace_hash = digest_update(rec_.decision_trace_hash, job_id);
        rec_.decision_trace_hash =
            digest_update(rec_.decision_trace_hash, static_cast<std::uint64_t>(s));

        std::uint64_t gen_before = servers_[s].generation();
        servers_[s].enqueue(Job{job_id, x, x, r, now, job_id}, now);
        if (servers_[s].generation() != gen_before) push_completion(s, now);
        last_dispatch_obs_[s] = now;

        if (++in_system_ > kInstabilityLimit)
            throw TrialAbort(seed_, "instability: more than 1e6 jobs in system (seed " +
                                        std::to_string(seed_) + ")");

        if (arrivals_scheduled_ < cfg_.jobs_per_trial) {
            push_event({now + arrivals_.next_exponential(1.0 / lambda_), seq_++,
                        Event::Arrival, 0, 0});
            ++arrivals_scheduled_;
        }

        if (cfg_.guarded) {
            if (cfg_.assert_invariants && (arrivals_scheduled_ & 0xFFF) == 0)
                full_tightness_audit();
            if ((arrivals_scheduled_ & 0xFFFFF) == 0)
                for (auto& d : dispatchers_) d.guard.renormalize();
        }
    }

    void on_completion(double now, int s, std::uint64_t generation) {
        if (servers_[s].generation() != generation) return;  // superseded
        Job done = servers_[s].finish_served(now);
        --in_system_;
        ++completions_;
        if (completions_ > warmup_cutoff_) {
            if (!warmup_done_) {
                warmup_done_ = true;
                window_start_ = now;
            }
            double t = now - done.arrival_time;
            response_sum_ += t;
            ++recorded_;
            rec_.rank_response_sum[done.rank] += t;
            ++rec_.rank_response_count[done.rank];
        }
        if (servers_[s].busy()) {
            push_completion(s, now);
        } else if (cfg_.guarded && cfg_.resets_enabled) {
            if (messages_on_) {
                for (int d = 0; d < cfg_.dispatchers; ++d) {
                    std::uint64_t idx = messages_.size();
                    messages_.push_back(ResetMessage{s, d, server_digest_[s][d], now,
                                                     now + delay_draw(),
                                                     server_received_[s][d]});
                    push_event({messages_.back().deliver_time, seq_++, Event::ResetDelivery,
                                s, idx});
                }
            } else {
                for (auto& d : dispatchers_) d.guard.reset(s);
                ++rec_.resets_direct;
            }
        }
    }

    double delay_draw() {
        const DelaySpec& d = *cfg_.reset_delay;
        if (d.kind == DelaySpec::Kind::Deterministic) return d.value;
        return delays_.next_exponential(d.value);
    }

    void on_reset_delivery(std::uint64_t idx) {
        const ResetMessage& m = messages_[idx];
        DispatcherNode& node = dispatchers_[m.dispatcher];
        bool applied = handle_reset_message(node, m);
        applied ? ++rec_.resets_applied : ++rec_.resets_ignored;
        // Ground truth: an applied reset means the dispatcher sent nothing to
        // this server since it emptied (so the server holds none of its jobs).
        bool safe = node.sent_count[m.server] == m.received_at_emit;
        if (applied != safe) ++rec_.protocol_violations;
    }

    // Summed counters across all dispatchers must stay within tightness d*g.
    void global_rank_check(int r) {
        if (cfg_.g == kInf) return;
        double lo = kInf, hi = -kInf;
        for (int s = 0; s < cfg_.k; ++s) {
            double v = 0;
            for (const auto& d : dispatchers_) {
                auto row = d.guard.row(r);
                if (!row.empty()) v += row[s];
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double limit = cfg_.dispatchers * cfg_.g * rank_boundary(c_, r + 1);
        double tol = 1e-9 * limit + 1e-12 * (std::abs(hi) + std::abs(lo));
        if (hi - lo > limit + tol) ++rec_.global_tightness_violations;
    }

    void full_tightness_audit() {
        for (auto& d : dispatchers_) {
            for (const auto& v : d.guard.check_tightness()) {
                ++rec_.tightness_violations;
                rec_.max_tightness_violation =
                    std::max(rec_.max_tightness_violation, v.spread - v.limit);
            }
        }
    }

    // Lemma: pairwise spread of rank-<=r remaining work stays within
    // 2 g_total c^{r+2}/(c-1) under rank-priority service (g_total = d*g when
    // d dispatchers each hold local tightness g).
    void work_balance_probe(double now) {
        int rmin = INT_MAX, rmax = INT_MIN;
        for (const auto& sv : servers_) {
            if (sv.ledger_rank_min() > sv.ledger_rank_max()) continue;
            rmin = std::min(rmin, sv.ledger_rank_min());
            rmax = std::max(rmax, sv.ledger_rank_max());
        }
        if (rmin > rmax) return;
        prefix_.assign(cfg_.k, 0.0);
        double g_total = cfg_.g * cfg_.dispatchers;
        for (int r = rmin; r <= rmax; ++r) {
            double lo = kInf, hi = -kInf;
            for (int s = 0; s < cfg_.k; ++s) {
                prefix_[s] += servers_[s].remaining_at_rank(r, now);
                lo = std::min(lo, prefix_[s]);
                hi = std::max(hi, prefix_[s]);
            }
            double spread = hi - lo;
            double limit = 2.0 * g_total * rank_boundary(c_, r + 2) / (c_ - 1.0);
            auto& worst = rec_.max_work_imbalance_by_rank[r];
            worst = std::max(worst, spread);
            if (spread > limit * (1 + 1e-9) + 1e-9) ++rec_.balance_violations;
        }
    }

    void finalize() {
        if (cfg_.guarded && cfg_.assert_invariants) full_tightness_audit();
        rec_.completed = recorded_;
        rec_.mean_response = recorded_ > 0 ? response_sum_ / static_cast<double>(recorded_) : 0;
        rec_.duration = warmup_done_ ? clock_ - window_start_ : 0;
        rec_.time_avg_jobs_in_system = rec_.duration > 0 ? time_n_accum_ / rec_.duration : 0;
        rec_.arrival_avg_jobs_in_system =
            arrival_n_count_ > 0 ? arrival_n_sum_ / static_cast<double>(arrival_n_count_) : 0;
    }

    const SimConfig& cfg_;
    std::uint64_t seed_;
    RngStream arrivals_, sizes_, policy_rng_, routing_, delays_;
    double lambda_ = 0, c_ = 2;
    bool messages_on_ = false;

    std::vector<ServerQueue> servers_;
    std::vector<DispatcherNode> dispatchers_;
    std::vector<std::vector<std::uint64_t>> server_digest_;
    std::vector<std::vector<std::int64_t>> server_received_;
    std::vector<ResetMessage> messages_;

    std::priority_queue<Event, std::vector<Event>, EventAfter> calendar_;
    std::uint64_t seq_ = 0;
    double clock_ = 0;

    std::vector<double> remaining_obs_, last_dispatch_obs_, prefix_;
    std::vector<int> count_obs_, candidates_, all_servers_, scratch_;

    std::int64_t arrivals_scheduled_ = 0, completions_ = 0, recorded_ = 0;
    std::int64_t in_system_ = 0;
    std::uint64_t next_job_id_ = 1;
    std::int64_t warmup_cutoff_ = 0;
    bool warmup_done_ = false;
    double window_start_ = 0;
    double response_sum_ = 0;
    double time_n_accum_ = 0, arrival_n_sum_ = 0;
    std::int64_t arrival_n_count_ = 0;

    TrialRecord rec_;
};

}  // namespace

TrialRecord run_trial(const SimConfig& config, std::uint64_t seed) {
    config.validate();
    Engine engine(config, seed);
    return engine.run();
}

RunStats run_experiment(const SimConfig& config) {
    config.validate();
    int n = config.trials;
    std::vector<TrialRecord> records(n);
    std::vector<std::exception_ptr> errors(n);
    int workers = std::max(1, std::min(config.parallelism, n));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                records[i] = run_trial(config, config.seed + static_cast<std::uint64_t>(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (int i = 0; i < n; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);

    RunStats stats;
    stats.trials = std::move(records);
    std::vector<double> means;
    std::map<int, double> rank_sum;
    std::map<int, std::int64_t> rank_count;
    for (const TrialRecord& r : stats.trials) {
        means.push_back(r.mean_response);
        stats.completed += r.completed;
        stats.violations += r.tightness_violations + r.global_tightness_violations +
                            r.balance_violations + r.protocol_violations;
        stats.max_tightness_violation =
            std::max(stats.max_tightness_violation, r.max_tightness_violation);
        stats.resets_applied += r.resets_applied;
        stats.resets_ignored += r.resets_ignored;
        for (const auto& [rank, v] : r.max_work_imbalance_by_rank) {
            auto& worst = stats.max_work_imbalance_by_rank[rank];
            worst = std::max(worst, v);
        }
        for (const auto& [rank, s] : r.rank_response_sum) rank_sum[rank] += s;
        for (const auto& [rank, c] : r.rank_response_count) rank_count[rank] += c;
    }
    for (const auto& [rank, s] : rank_sum)
        if (rank_count[rank] > 0)
            stats.per_rank_mean_T[rank] = s / static_cast<double>(rank_count[rank]);
    MeanCi ci = mean_ci_95(means);
    stats.mean_T = ci.mean;
    stats.ci_halfwidth_95 = ci.halfwidth;
    return stats;
}

double student_t_975(int df) {
    static constexpr std::pair<int, double> table[] = {
        {1, 12.706}, {2, 4.303},  {3, 3.182},  {4, 2.776},  {5, 2.571},  {6, 2.447},
        {7, 2.365},  {8, 2.306},  {9, 2.262},  {10, 2.228}, {11, 2.201}, {12, 2.179},
        {13, 2.160}, {14, 2.145}, {15, 2.131}, {16, 2.120}, {17, 2.110}, {18, 2.101},
        {19, 2.093}, {20, 2.086}, {21, 2.080}, {22, 2.074}, {23, 2.069}, {24, 2.064},
        {25, 2.060}, {26, 2.056}, {27, 2.052}, {28, 2.048}, {29, 2.045}, {30, 2.042},
        {35, 2.030}, {40, 2.021}, {50, 2.009}, {60, 2.000}, {80, 1.990}, {100, 1.984},
        {120, 1.980},
    };
    if (df < 1) return kInf;
    double prev_df = 1, prev_t = 12.706;
    for (const auto& [d, t] : table) {
        if (df == d) return t;
        if (df < d) {
            double w = (df - prev_df) / (d - prev_df);
            return prev_t + w * (t - prev_t);
        }
        prev_df = d;
        prev_t = t;
    }
    return 1.960;
}

MeanCi mean_ci_95(std::span<const double> values) {
    MeanCi out;
    std::size_t n = values.size();
    if (n == 0) return out;
    double sum = 0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(n);
    if (n < 2) return out;
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    double stderr_mean = std::sqrt(ss / static_cast<double>(n - 1)) /
                         std::sqrt(static_cast<double>(n));
    out.halfwidth = student_t_975(static_cast<int>(n) - 1) * stderr_mean;
    return out;
}

}  // namespace lbsim
