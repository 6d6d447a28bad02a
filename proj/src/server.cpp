#include "lbsim/server.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lbsim {

std::string to_string(Discipline d) {
    switch (d) {
        case Discipline::Srpt: return "srpt";
        case Discipline::Prio: return "prio";
        case Discipline::Psjf: return "psjf";
        case Discipline::Fcfs: return "fcfs";
    }
    return "?";
}

Discipline discipline_from_string(const std::string& s) {
    if (s == "srpt") return Discipline::Srpt;
    if (s == "prio") return Discipline::Prio;
    if (s == "psjf") return Discipline::Psjf;
    if (s == "fcfs") return Discipline::Fcfs;
    throw std::invalid_argument("unknown scheduling discipline: " + s);
}

ServerQueue::ServerQueue(Discipline discipline, double speed)
    : discipline_(discipline), speed_(speed) {
    if (!(speed > 0)) throw std::invalid_argument("server speed must be positive");
}

ServerQueue::Key ServerQueue::key_of(const Job& j) const {
    switch (discipline_) {
        case Discipline::Srpt:
            return {j.remaining, j.arrival_time, j.id};
        case Discipline::Psjf:
            return {j.size, j.arrival_time, j.id};
        case Discipline::Prio:
            return {static_cast<double>(j.rank), static_cast<double>(j.dispatch_seq), j.id};
        case Discipline::Fcfs:
            return {static_cast<double>(j.dispatch_seq), 0.0, j.id};
    }
    return {0, 0, 0};
}

void ServerQueue::ledger_add(int rank, double amount) {
    if (remaining_by_rank_.empty()) {
        base_rank_ = rank;
        remaining_by_rank_.assign(1, 0.0);
        dispatched_by_rank_.assign(1, 0.0);
    }
    while (rank < base_rank_) {
        remaining_by_rank_.insert(remaining_by_rank_.begin(), 0.0);
        dispatched_by_rank_.insert(dispatched_by_rank_.begin(), 0.0);
        --base_rank_;
    }
    while (rank >= base_rank_ + static_cast<int>(remaining_by_rank_.size())) {
        remaining_by_rank_.push_back(0.0);
        dispatched_by_rank_.push_back(0.0);
    }
    remaining_by_rank_[rank - base_rank_] += amount;
}

double ServerQueue::served_remaining_at(double now) const {
    return served_.remaining - (now - last_touch_) * speed_;
}

void ServerQueue::touch(double now) {
    if (served_valid_) {
        double depleted = (now - last_touch_) * speed_;
        if (depleted > 0) {
            served_.remaining -= depleted;
            remaining_by_rank_[served_.rank - base_rank_] -= depleted;
        }
    }
    last_touch_ = now;
}

void ServerQueue::enqueue(const Job& job, double now) {
    assert(job.remaining == job.size);
    assert(!served_valid_ || served_.id != job.id);
    touch(now);
    ledger_add(job.rank, job.size);
    dispatched_by_rank_[job.rank - base_rank_] += job.size;
    ++count_;
    if (!served_valid_) {
        served_ = job;
        served_valid_ = true;
    } else if (key_of(job) < key_of(served_)) {
        waiting_total_ += served_.remaining;
        waiting_.push({key_of(served_), served_});
        served_ = job;
    } else {
        waiting_total_ += job.size;
        waiting_.push({key_of(job), job});
        return;  // pending completion unchanged
    }
    ++generation_;
}

std::optional<ServerQueue::Completion> ServerQueue::next_completion(double now) const {
    if (!served_valid_) return std::nullopt;
    double t = now + served_remaining_at(now) / speed_;
    if (t < now) t = now;  // guards against a rounding-sized negative residue
    return Completion{t, served_.id};
}

Job ServerQueue::finish_served(double now) {
    assert(served_valid_);
    touch(now);
    // The completion event time was computed from this remaining; treat the
    // event as authoritative and clear the (rounding-sized) residue exactly.
    assert(std::abs(served_.remaining) < 1e-6);
    remaining_by_rank_[served_.rank - base_rank_] -= served_.remaining;
    Job done = served_;
    done.remaining = 0;
    --count_;
    if (waiting_.empty()) {
        served_valid_ = false;
    } else {
        served_ = waiting_.top().job;
        waiting_.pop();
        waiting_total_ -= served_.remaining;
    }
    ++generation_;
    return done;
}

double ServerQueue::total_remaining(double now) const {
    if (!served_valid_) return 0;
    return waiting_total_ + served_remaining_at(now);
}

double ServerQueue::remaining_work_below(int rank, double now) const {
    if (remaining_by_rank_.empty()) return 0;
    double sum = 0;
    int top = std::min(rank, ledger_rank_max());
    for (int r = base_rank_; r <= top; ++r) sum += remaining_by_rank_[r - base_rank_];
    if (served_valid_ && served_.rank <= rank) sum -= (now - last_touch_) * speed_;
    return sum;
}

double ServerQueue::remaining_at_rank(int rank, double now) const {
    if (remaining_by_rank_.empty() || rank < base_rank_ || rank > ledger_rank_max()) return 0;
    double v = remaining_by_rank_[rank - base_rank_];
    if (served_valid_ && served_.rank == rank) v -= (now - last_touch_) * speed_;
    return v;
}

double ServerQueue::dispatched_work_below(int rank) const {
    if (dispatched_by_rank_.empty()) return 0;
    double sum = 0;
    int top = std::min(rank, ledger_rank_max());
    for (int r = base_rank_; r <= top; ++r) sum += dispatched_by_rank_[r - base_rank_];
    return sum;
}

}  // namespace lbsim
