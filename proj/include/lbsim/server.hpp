#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace lbsim {

enum class Discipline { Srpt, Prio, Psjf, Fcfs };

std::string to_string(Discipline d);
Discipline discipline_from_string(const std::string& s);

struct Job {
    std::uint64_t id = 0;
    double size = 0;
    double remaining = 0;
    int rank = 0;
    double arrival_time = 0;
    std::uint64_t dispatch_seq = 0;  // FCFS order within a rank
};

// One preemptive server. The served job is always the discipline minimum;
// its remaining size depletes lazily at rate `speed` between touches, so
// every operation is O(log n) with no global sweeps. Preemption checks
// happen only at enqueue/completion events, which is exact: only the served
// job depletes, so two jobs' keys cannot cross between events.
class ServerQueue {
public:
    ServerQueue(Discipline discipline, double speed);

    void enqueue(const Job& job, double now);

    bool busy() const { return served_valid_; }
    int job_count() const { return count_; }
    double speed() const { return speed_; }
    Discipline discipline() const { return discipline_; }

    struct Completion {
        double time;
        std::uint64_t job_id;
    };
    // Completion of the served job assuming no further arrivals; nullopt when
    // idle.
    std::optional<Completion> next_completion(double now) const;

    // Remove and return the served job; `now` must be its completion time.
    Job finish_served(double now);

    // Stale-event guard: bumped whenever the pending completion changes.
    std::uint64_t generation() const { return generation_; }

    double total_remaining(double now) const;
    // W_s^{<=r}: remaining work of jobs with rank <= r. INT_MAX acts as the
    // +infinity sentinel.
    double remaining_work_below(int rank, double now) const;
    // V_s^{<=r}: total work ever dispatched here with rank <= r.
    double dispatched_work_below(int rank) const;
    // Current remaining work of rank-r jobs only.
    double remaining_at_rank(int rank, double now) const;

    int ledger_rank_min() const { return base_rank_; }
    int ledger_rank_max() const { return base_rank_ + static_cast<int>(remaining_by_rank_.size()) - 1; }

    const Job* served() const { return served_valid_ ? &served_ : nullptr; }

private:
    struct Key {
        double a, b;
        std::uint64_t c;
        bool operator<(const Key& o) const {
            if (a != o.a) return a < o.a;
            if (b != o.b) return b < o.b;
            return c < o.c;
        }
    };
    struct Entry {
        Key key;
        Job job;
        bool operator>(const Entry& o) const { return o.key < key; }
    };

    Key key_of(const Job& j) const;
    void touch(double now);
    double served_remaining_at(double now) const;
    void ledger_add(int rank, double amount);

    Discipline discipline_;
    double speed_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> waiting_;
    Job served_{};
    bool served_valid_ = false;
    double last_touch_ = 0;
    double waiting_total_ = 0;
    int count_ = 0;
    std::uint64_t generation_ = 0;

    int base_rank_ = 0;
    std::vector<double> remaining_by_rank_;
    std::vector<double> dispatched_by_rank_;
};

}  // namespace lbsim
