#pragma once

#include "lbsim/server.hpp"
#include "lbsim/sizedist.hpp"

namespace lbsim {

// Inputs of the guarded-dispatch response-time bound. All formulas are in
// the unit-total-capacity convention: k servers of speed 1/k each, so a
// size-x job needs kx service time.
struct BoundInputs {
    const SizeDistribution* dist = nullptr;
    double lambda = 0;  // rho / E[X]
    double k = 1;
    double g = 1;       // guardrail tightness
    double c = 2;       // guardrail rank width
};

// Upper bound on E[T(x)] for a guarded dispatcher with rank-priority
// servers:
//   lam/2 * int_0^{c^{r+1}} t^2 f / ((1-rho_{c^r})(1-rho_{c^{r+1}}))
//     + ((4c+2) g k c^{r+1}/(c-1) + kx) / (1-rho_{c^r})
// Rank-boundary loads use strictly-below partial moments so atoms sitting
// exactly on a boundary are counted with the rank they belong to. Returns
// +inf when rho at the rank's upper boundary reaches 1 (divergent bound).
double guarded_prio_bound(double x, const BoundInputs& in);

// E_X of guarded_prio_bound, evaluated exactly as a sum over ranks (the
// bound is constant-plus-linear within a rank, so partial moments suffice;
// this covers atomic laws with no quadrature).
double mean_guarded_prio_bound(const BoundInputs& in);

// Single-server M/G/1 mean response time of a size-x job, speed-1 units.
// For rank-priority service pass the rank width c (ignored otherwise).
// Returns +inf on divergence (rho >= 1).
double mg1_response(double x, const SizeDistribution& dist, double lambda, Discipline disc,
                    double rank_width_c = 0);

// E_X of the above, by quadrature for continuous laws and atom sums for
// discrete ones.
double mean_mg1_response(const SizeDistribution& dist, double lambda, Discipline disc,
                         double rank_width_c = 0);

// Load from jobs strictly smaller than y.
double load_below(const SizeDistribution& dist, double lambda, double y);

}  // namespace lbsim
