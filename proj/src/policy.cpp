#include "lbsim/policy.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lbsim {

PolicySpec PolicySpec::random() { return PolicySpec{PolicyKind::Random, 0, {}}; }
PolicySpec PolicySpec::round_robin() { return PolicySpec{PolicyKind::RoundRobin, 0, {}}; }
PolicySpec PolicySpec::lwl() { return PolicySpec{PolicyKind::Lwl, 0, {}}; }
PolicySpec PolicySpec::jsq() { return PolicySpec{PolicyKind::Jsq, 0, {}}; }

PolicySpec PolicySpec::jsq_d(int d) {
    if (d < 1) throw std::invalid_argument("jsq_d: d must be >= 1");
    return PolicySpec{PolicyKind::JsqD, d, {}};
}

std::vector<double> sitae_cutoffs(const SizeDistribution& dist, double lambda, int k) {
    if (k < 2) throw std::domain_error("sitae_cutoffs: k must be >= 2");
    double rho = lambda * dist.mean();
    double lo0 = dist.support_min();
    double hi0 = std::isfinite(dist.support_max()) ? dist.support_max() : dist.effective_max();
    while (partial_load(dist, lambda, hi0) < rho * (1.0 - 1e-13)) hi0 *= 2;

    std::vector<double> cuts;
    for (int i = 1; i < k; ++i) {
        double target = rho * static_cast<double>(i) / k;
        double lo = lo0 * 0.5, hi = hi0;
        // smallest y with partial_load(y) >= target
        while (hi - lo > 1e-9) {
            double mid = 0.5 * (lo + hi);
            if (partial_load(dist, lambda, mid) >= target - 1e-14 * rho)
                hi = mid;
            else
                lo = mid;
        }
        cuts.push_back(hi);
    }
    return cuts;
}

PolicySpec PolicySpec::sita_e(const SizeDistribution& dist, double lambda, int k) {
    PolicySpec spec;
    spec.kind = PolicyKind::SitaE;
    SitaPlan& plan = spec.sita;
    plan.cutoffs = sitae_cutoffs(dist, lambda, k);

    double top = std::isfinite(dist.support_max()) ? dist.support_max()
                                                   : 2.0 * plan.cutoffs.back();
    for (int i = 0; i < k; ++i) {
        double lo = i == 0 ? dist.support_min() : plan.cutoffs[i - 1];
        double hi = i == k - 1 ? top : plan.cutoffs[i];
        plan.interval_mid.push_back(0.5 * (lo + hi));
    }

    // An atom covers the load segment [lambda*m1_below(a), +lambda*a*p); each
    // server owns load segment [i*rho/k, (i+1)*rho/k). Split the atom over
    // the servers it overlaps.
    double rho = lambda * dist.mean();
    for (const Atom& a : dist.atoms()) {
        if (a.prob <= 0) continue;
        SitaPlan::AtomSplit split;
        split.size = a.size;
        double seg_lo = lambda * dist.first_moment_below(a.size);
        double seg_len = lambda * a.size * a.prob;
        double per = rho / k;
        double total = 0;
        for (int i = 0; i < k; ++i) {
            double s_lo = i == 0 ? -std::numeric_limits<double>::infinity() : per * i;
            double s_hi = i == k - 1 ? std::numeric_limits<double>::infinity() : per * (i + 1);
            double ov = std::min(seg_lo + seg_len, s_hi) - std::max(seg_lo, s_lo);
            if (ov > 1e-15 * seg_len) {
                split.servers.push_back(i);
                total += ov;
                split.cum_prob.push_back(total);
            }
        }
        for (double& cp : split.cum_prob) cp /= total;
        split.cum_prob.back() = 1.0;
        plan.atom_splits.push_back(std::move(split));
    }
    spec.validate(k);
    return spec;
}

void PolicySpec::validate(int k) const {
    switch (kind) {
        case PolicyKind::JsqD:
            if (d < 1 || d > k) throw std::invalid_argument("jsq_d: requires 1 <= d <= k");
            break;
        case PolicyKind::SitaE:
            if (static_cast<int>(sita.cutoffs.size()) != k - 1)
                throw std::invalid_argument("sita_e: cutoff list must have exactly k-1 entries");
            break;
        default:
            break;
    }
}

std::string PolicySpec::name() const {
    switch (kind) {
        case PolicyKind::Random: return "random";
        case PolicyKind::RoundRobin: return "rr";
        case PolicyKind::Lwl: return "lwl";
        case PolicyKind::Jsq: return "jsq";
        case PolicyKind::JsqD: return "jsq-" + std::to_string(d);
        case PolicyKind::SitaE: return "sita-e";
    }
    return "?";
}

namespace {

template <class Metric>
int argmin_candidate(std::span<const int> candidates, Metric&& metric) {
    int best = candidates.front();
    auto best_m = metric(best);
    for (int s : candidates.subspan(1)) {
        auto m = metric(s);
        if (m < best_m) {  // strict: first (lowest-index) minimum wins
            best_m = m;
            best = s;
        }
    }
    return best;
}

int sita_designated(const SitaPlan& plan, double x, RngStream& rng) {
    for (const auto& split : plan.atom_splits) {
        if (split.size == x) {
            if (split.servers.size() == 1) return split.servers.front();
            double u = rng.next_uniform();
            for (size_t i = 0; i < split.cum_prob.size(); ++i)
                if (u <= split.cum_prob[i]) return split.servers[i];
            return split.servers.back();
        }
    }
    auto it = std::lower_bound(plan.cutoffs.begin(), plan.cutoffs.end(), x);
    return static_cast<int>(it - plan.cutoffs.begin());
}

}  // namespace

int dispatch(const PolicySpec& policy, double x, std::span<const int> candidates,
             const ServerObservation& obs, RngStream& rng, std::vector<int>& scratch) {
    assert(!candidates.empty());
    switch (policy.kind) {
        case PolicyKind::Random:
            return candidates[rng.next_below(candidates.size())];
        case PolicyKind::RoundRobin:
            return argmin_candidate(candidates,
                                    [&](int s) { return obs.last_dispatch_time[s]; });
        case PolicyKind::Lwl:
            return argmin_candidate(candidates, [&](int s) { return obs.remaining_work[s]; });
        case PolicyKind::Jsq:
            return argmin_candidate(candidates, [&](int s) { return obs.job_count[s]; });
        case PolicyKind::JsqD: {
            if (static_cast<int>(candidates.size()) <= policy.d)
                return argmin_candidate(candidates, [&](int s) { return obs.job_count[s]; });
            scratch.assign(candidates.begin(), candidates.end());
            for (int i = 0; i < policy.d; ++i) {
                auto j = i + rng.next_below(scratch.size() - i);
                std::swap(scratch[i], scratch[j]);
            }
            // lowest index wins ties among the sampled servers
            int best = scratch[0];
            for (int i = 1; i < policy.d; ++i) {
                int s = scratch[i];
                if (obs.job_count[s] < obs.job_count[best] ||
                    (obs.job_count[s] == obs.job_count[best] && s < best))
                    best = s;
            }
            return best;
        }
        case PolicyKind::SitaE: {
            int want = sita_designated(policy.sita, x, rng);
            for (int s : candidates)
                if (s == want) return s;
            return argmin_candidate(
                candidates, [&](int s) { return std::abs(policy.sita.interval_mid[s] - x); });
        }
    }
    return candidates.front();  // unreachable
}

}  // namespace lbsim
