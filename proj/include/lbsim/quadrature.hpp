#pragma once

#include <functional>

namespace lbsim {

// Adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b].
// Subdivides until the local Kronrod-Gauss discrepancy is below the
// tolerance share of the interval. Intended for the smooth closed-form
// integrands of the analytic module; not a general-purpose oscillatory
// integrator.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 1e-14);

// Same, substituting x = exp(u); suited to integrands spread over several
// decades (heavy-tailed size laws). Requires 0 < a < b.
double integrate_log(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-10, double abs_tol = 1e-14);

}  // namespace lbsim
