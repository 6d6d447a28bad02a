#pragma once

#include <span>
#include <string>
#include <vector>

#include "lbsim/rng.hpp"
#include "lbsim/sizedist.hpp"

namespace lbsim {

// Per-server observables the base policies decide on.
struct ServerObservation {
    std::span<const double> remaining_work;
    std::span<const int> job_count;
    std::span<const double> last_dispatch_time;
};

enum class PolicyKind { Random, RoundRobin, Lwl, Jsq, JsqD, SitaE };

// Precomputed SITA-E assignment plan. Cutoffs equalize expected load per
// server; an atom whose probability mass straddles cutoff(s) is split across
// the adjacent servers in proportion to their residual load share, realized
// by a biased coin per job.
struct SitaPlan {
    std::vector<double> cutoffs;        // k-1 increasing boundaries
    std::vector<double> interval_mid;   // k interval midpoints (fallback metric)
    struct AtomSplit {
        double size;
        std::vector<int> servers;
        std::vector<double> cum_prob;  // cumulative, last entry 1
    };
    std::vector<AtomSplit> atom_splits;
};

struct PolicySpec {
    PolicyKind kind = PolicyKind::Random;
    int d = 0;       // JSQ-d sample size
    SitaPlan sita;   // populated for SitaE

    static PolicySpec random();
    static PolicySpec round_robin();
    static PolicySpec lwl();
    static PolicySpec jsq();
    static PolicySpec jsq_d(int d);
    static PolicySpec sita_e(const SizeDistribution& dist, double lambda, int k);

    void validate(int k) const;
    std::string name() const;
};

// Choose a server for a size-x job among `candidates` (ascending ids,
// nonempty). Ties everywhere break to the lowest server index. `scratch` is
// caller-owned working storage (JSQ-d sampling).
int dispatch(const PolicySpec& policy, double x, std::span<const int> candidates,
             const ServerObservation& obs, RngStream& rng, std::vector<int>& scratch);

// Size boundaries y_1 < ... < y_{k-1} with partial_load(dist, lambda, y_i)
// reaching i*rho/k, solved by bisection. On atomic laws where exact
// equalization is impossible the boundaries land on the atoms realizing the
// closest nonincreasing overshoot.
std::vector<double> sitae_cutoffs(const SizeDistribution& dist, double lambda, int k);

}  // namespace lbsim
