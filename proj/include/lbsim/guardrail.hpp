#pragma once

#include <span>
#include <vector>

namespace lbsim {

// r = floor(log_c x). Computed via logarithm, then repaired by direct
// comparison with c^r and c^{r+1} so the sandwich c^r <= x < c^{r+1} holds
// even within rounding distance of a boundary.
int rank_of(double x, double c);

// c = 1 + 1/(1 + ln(1/(1-rho))). Strictly decreasing in rho, in (1, 2).
double rank_width(double rho);

// c^e for integer e; the one definition of rank boundaries used everywhere
// so threshold comparisons stay self-consistent.
double rank_boundary(double c, int e);

struct GuardrailConfig {
    double tightness = 1.0;   // g >= 1; +inf disables restriction (safe set = all)
    double rank_width = 2.0;  // c in (1, 2]
    int server_count = 1;
    // Empty means homogeneous speed-1/k servers and work-unit counters.
    // Heterogeneous speeds switch counters to time units (x / mu_s).
    std::vector<double> speeds;

    bool heterogeneous() const;
    void validate() const;
};

struct TightnessViolation {
    int rank;  // class index for the finite-class variant
    int server_lo, server_hi;
    double spread, limit;
};

// Per-(rank, server) work counters G^r_s with sparse rank storage: a rank
// absent from the table reads as all zeros.
class GuardrailState {
public:
    explicit GuardrailState(GuardrailConfig cfg);

    const GuardrailConfig& config() const { return cfg_; }
    int rank_of_size(double x) const { return rank_of(x, cfg_.rank_width); }

    // Counters for one rank (k zeros if the rank is not materialized).
    std::vector<double> counters(int rank) const;

    // Servers s with G^r_s + x <= G^r_min + g c^{r+1}; never empty.
    void safe_set(double x, std::vector<int>& out) const;
    bool is_safe(double x, int server) const;

    // G^r_s += x (x/mu_s in heterogeneous mode). Caller must have checked
    // is_safe; violating dispatches trip an assertion in checked builds.
    void record_dispatch(int server, double x);

    // Drop every stored counter of `server` to its rank minimum. Caller
    // asserts the server is empty (the reset-message protocol relaxes this
    // by validating digests before calling).
    void reset(int server);

    // Every (rank, server pair) violating |G^r_s - G^r_s'| <= g c^{r+1}.
    std::vector<TightnessViolation> check_tightness() const;

    // Subtract the per-rank minimum from each stored rank; pairwise
    // differences (the only meaningful quantity) are unchanged. Keeps
    // counter magnitudes small on long runs.
    void renormalize();

    int stored_rank_min() const { return base_rank_; }
    int stored_rank_max() const { return base_rank_ + static_cast<int>(rows_.size()) - 1; }
    // Stored counters row for a rank, or empty span if not materialized.
    std::span<const double> row(int rank) const;

    // (max - min) - g c^{r+1} - float_tolerance for one rank; positive means
    // the rank violates Definition-2.1 tightness. -inf when not stored or
    // unrestricted. O(k); the engine's per-event check.
    double rank_tightness_excess(int rank) const;

private:
    double threshold(int rank) const;
    double dispatch_amount(int server, double x) const;
    std::vector<double>& ensure_row(int rank);

    GuardrailConfig cfg_;
    int base_rank_ = 0;
    std::vector<std::vector<double>> rows_;
};

// Sum counters of d independent dispatcher states rank-wise and report the
// pairs violating the widened constraint g_sum * c^{r+1}, where g_sum is
// normally d times the local tightness.
std::vector<TightnessViolation> check_group_tightness(
    std::span<const GuardrailState* const> states, double g_sum);

// Finite-priority-class variant: classes are the intervals
// (bounds[i-1], bounds[i]] and the allowed counter spread for class i is the
// interval's upper bound.
class ClassGuardrailState {
public:
    ClassGuardrailState(std::vector<double> boundaries, int server_count);

    int class_count() const { return static_cast<int>(bounds_.size()) - 1; }
    int class_of(double x) const;  // throws above the top boundary

    void class_safe_set(double x, std::vector<int>& out) const;
    void record_dispatch(int server, double x);
    void reset(int server);
    std::vector<TightnessViolation> check() const;  // rank field = class index
    std::vector<double> counters(int cls) const;

private:
    std::vector<double> bounds_;
    std::vector<std::vector<double>> counters_;
};

}  // namespace lbsim
