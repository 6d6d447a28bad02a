#include "lbsim/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lbsim/guardrail.hpp"
#include "lbsim/quadrature.hpp"

namespace lbsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pieces of the bound that are shared by every size of one rank.
struct RankTerms {
    double rho_lo, rho_hi;   // loads strictly below c^r and c^{r+1}
    double wait;             // lam/2 * S2(<c^{r+1}) / ((1-rho_lo)(1-rho_hi))
    bool divergent;
};

RankTerms rank_terms(const SizeDistribution& dist, double lambda, double c, int r) {
    RankTerms t{};
    double lo = rank_boundary(c, r), hi = rank_boundary(c, r + 1);
    t.rho_lo = lambda * dist.first_moment_below(lo);
    t.rho_hi = lambda * dist.first_moment_below(hi);
    if (t.rho_hi >= 1 || t.rho_lo >= 1) {
        t.divergent = true;
        return t;
    }
    t.wait = 0.5 * lambda * dist.second_moment_below(hi) / ((1 - t.rho_lo) * (1 - t.rho_hi));
    return t;
}

}  // namespace

double load_below(const SizeDistribution& dist, double lambda, double y) {
    return lambda * dist.first_moment_below(y);
}

double guarded_prio_bound(double x, const BoundInputs& in) {
    if (!(x > 0)) throw std::domain_error("guarded_prio_bound: x must be positive");
    const SizeDistribution& dist = *in.dist;
    int r = rank_of(x, in.c);
    RankTerms t = rank_terms(dist, in.lambda, in.c, r);
    if (t.divergent) return kInf;
    double gterm = (4 * in.c + 2) * in.g * in.k * rank_boundary(in.c, r + 1) / (in.c - 1);
    return t.wait + (gterm + in.k * x) / (1 - t.rho_lo);
}

namespace {

// E_X of a function that is constant-plus-linear within each rank:
// per_rank(r, terms) must return (const_part, coefficient of x). Exact for
// both continuous and atomic laws via partial moments.
template <class PerRank>
double mean_by_rank(const SizeDistribution& dist, double lambda, double c, PerRank&& per_rank) {
    int r_lo;
    if (dist.support_min() > 0) {
        r_lo = rank_of(dist.support_min(), c);
    } else {
        r_lo = rank_of(dist.mean(), c);
        while (r_lo > -3000 && dist.cdf_below(rank_boundary(c, r_lo)) > 1e-18) --r_lo;
    }
    double top = std::isfinite(dist.support_max()) ? dist.support_max() : dist.effective_max();
    int r_hi = rank_of(top, c);
    while (dist.tail(rank_boundary(c, r_hi + 1)) > 0 && r_hi < r_lo + 100000) ++r_hi;

    double total = 0;
    for (int r = r_lo; r <= r_hi; ++r) {
        double lo = rank_boundary(c, r), hi = rank_boundary(c, r + 1);
        double mass = dist.cdf_below(hi) - dist.cdf_below(lo);
        if (mass <= 0) continue;
        RankTerms t = rank_terms(dist, lambda, c, r);
        if (t.divergent) return kInf;
        auto [const_part, x_coeff] = per_rank(r, t);
        double mean_in_rank = dist.first_moment_below(hi) - dist.first_moment_below(lo);
        total += mass * const_part + x_coeff * mean_in_rank;
    }
    return total;
}

}  // namespace

double mean_guarded_prio_bound(const BoundInputs& in) {
    return mean_by_rank(*in.dist, in.lambda, in.c, [&](int r, const RankTerms& t) {
        double gterm = (4 * in.c + 2) * in.g * in.k * rank_boundary(in.c, r + 1) / (in.c - 1);
        return std::pair{t.wait + gterm / (1 - t.rho_lo), in.k / (1 - t.rho_lo)};
    });
}

namespace {

// SRPT residence integral int_0^x dt/(1-rho_t). For atomic laws rho_t is a
// step function and the integral is an exact piecewise sum.
double srpt_residence(const SizeDistribution& dist, double lambda, double x) {
    if (dist.is_discrete()) {
        double acc = 0, prev = 0, load = 0;
        for (const Atom& a : dist.atoms()) {
            if (a.size >= x) break;
            acc += (a.size - prev) / (1 - load);
            load += lambda * a.prob * a.size;
            if (load >= 1) return kInf;
            prev = a.size;
        }
        acc += (x - prev) / (1 - load);
        return acc;
    }
    double lo = dist.support_min();
    double acc = std::min(x, lo);  // rho_t = 0 below the support
    if (x <= lo) return acc;
    auto f = [&](double t) { return 1.0 / (1 - lambda * dist.partial_first_moment(t)); };
    if (x / std::max(lo, 1e-12) > 1e3 && lo > 0)
        return acc + integrate_log(f, lo, x, 1e-10);
    return acc + integrate(f, lo, x, 1e-10);
}

// Waiting terms use (1-rho_{<=x})(1-rho_{<x}): the first factor is the
// steady-state relevant work, the second the busy-period expansion by
// strictly smaller arrivals (equal sizes queue FCFS behind the tagged job).
// Identical for continuous laws; at atoms the split is what makes SRPT
// collapse to Pollaczek-Khinchine on deterministic sizes.
double response_srpt(const SizeDistribution& dist, double lambda, double x) {
    double rho_inc = lambda * dist.partial_first_moment(x);
    double rho_exc = lambda * dist.first_moment_below(x);
    if (rho_inc >= 1) return kInf;
    double s2 = dist.partial_second_moment(x);
    double wait = lambda * (s2 + x * x * dist.tail(x)) /
                  (2 * (1 - rho_inc) * (1 - rho_exc));
    return srpt_residence(dist, lambda, x) + wait;
}

double response_psjf(const SizeDistribution& dist, double lambda, double x) {
    double rho_inc = lambda * dist.partial_first_moment(x);
    double rho_exc = lambda * dist.first_moment_below(x);
    if (rho_inc >= 1) return kInf;
    return x / (1 - rho_exc) + lambda * dist.partial_second_moment(x) /
                                   (2 * (1 - rho_inc) * (1 - rho_exc));
}

double response_fcfs(const SizeDistribution& dist, double lambda, double x) {
    double rho = lambda * dist.mean();
    if (rho >= 1) return kInf;
    return x + lambda * dist.second_moment() / (2 * (1 - rho));
}

double response_prio(const SizeDistribution& dist, double lambda, double c, double x) {
    RankTerms t = rank_terms(dist, lambda, c, rank_of(x, c));
    if (t.divergent) return kInf;
    return t.wait + x / (1 - t.rho_lo);
}

double mean_over_sizes(const SizeDistribution& dist,
                       const std::function<double(double)>& response) {
    if (dist.is_discrete()) {
        double acc = 0;
        for (const Atom& a : dist.atoms()) acc += a.prob * response(a.size);
        return acc;
    }
    auto f = [&](double x) { return dist.density(x) * response(x); };
    double lo = std::max(dist.support_min(), 1e-12);
    double hi = dist.effective_max();
    if (hi / lo > 1e3) return integrate_log(f, lo, hi, 1e-9);
    return integrate(f, lo, hi, 1e-9);
}

}  // namespace

double mg1_response(double x, const SizeDistribution& dist, double lambda, Discipline disc,
                    double rank_width_c) {
    if (!(x > 0)) throw std::domain_error("mg1_response: x must be positive");
    switch (disc) {
        case Discipline::Srpt: return response_srpt(dist, lambda, x);
        case Discipline::Psjf: return response_psjf(dist, lambda, x);
        case Discipline::Fcfs: return response_fcfs(dist, lambda, x);
        case Discipline::Prio:
            if (!(rank_width_c > 1))
                throw std::invalid_argument("mg1_response: Prio needs the rank width c");
            return response_prio(dist, lambda, rank_width_c, x);
    }
    return 0;
}

double mean_mg1_response(const SizeDistribution& dist, double lambda, Discipline disc,
                         double rank_width_c) {
    double rho = lambda * dist.mean();
    if (rho >= 1) return kInf;
    switch (disc) {
        case Discipline::Fcfs:
            return dist.mean() + lambda * dist.second_moment() / (2 * (1 - rho));
        case Discipline::Psjf:
            return mean_over_sizes(dist,
                                   [&](double x) { return response_psjf(dist, lambda, x); });
        case Discipline::Srpt: {
            if (dist.is_discrete())
                return mean_over_sizes(
                    dist, [&](double x) { return response_srpt(dist, lambda, x); });
            // E_X[residence] folds to a single integral of tail(t)/(1-rho_t).
            auto res = [&](double t) {
                return dist.tail(t) / (1 - lambda * dist.partial_first_moment(t));
            };
            double lo = std::max(dist.support_min(), 1e-12);
            double hi = dist.effective_max();
            double residence = lo +  // tail = 1, rho_t = 0 below the support
                               (hi / lo > 1e3 ? integrate_log(res, lo, hi, 1e-9)
                                              : integrate(res, lo, hi, 1e-9));
            double wait = mean_over_sizes(dist, [&](double x) {
                double rho_x = lambda * dist.partial_first_moment(x);
                return lambda * (dist.partial_second_moment(x) + x * x * dist.tail(x)) /
                       (2 * (1 - rho_x) * (1 - rho_x));
            });
            return residence + wait;
        }
        case Discipline::Prio: {
            if (!(rank_width_c > 1))
                throw std::invalid_argument("mean_mg1_response: Prio needs the rank width c");
            // The Prio response is constant-plus-linear within a rank, so the
            // rank sum is exact (quadrature would chase the boundary jumps).
            return mean_by_rank(dist, lambda, rank_width_c,
                                [&](int, const RankTerms& t) {
                                    return std::pair{t.wait, 1.0 / (1 - t.rho_lo)};
                                });
        }
    }
    return 0;
}

}  // namespace lbsim
