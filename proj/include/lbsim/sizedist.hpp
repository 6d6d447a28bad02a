#pragma once

#include <string>
#include <vector>

#include "lbsim/rng.hpp"

namespace lbsim {

// Point mass of a discrete size law.
struct Atom {
    double size;
    double prob;
};

// Job-size distribution with exact sampling and the partial-moment queries
// the guardrail math and response-time formulas need. Immutable after
// construction; safe to share across trials.
class SizeDistribution {
public:
    enum class Kind { BoundedPareto, Bimodal, Hyperexponential, Exponential, Deterministic };

    static SizeDistribution bounded_pareto(double alpha, double lower, double upper);
    static SizeDistribution bimodal(double small, double large, double p_small);
    static SizeDistribution hyperexponential(std::vector<double> branch_rates,
                                             std::vector<double> branch_probs);
    // Two-branch hyperexponential with balanced means (each branch carries
    // half the mean), solved from (mean, squared coefficient of variation).
    static SizeDistribution hyperexponential_fit(double mean, double scv);
    static SizeDistribution exponential(double mean);
    static SizeDistribution deterministic(double value);

    Kind kind() const { return kind_; }
    double sample(RngStream& rng) const;

    double mean() const { return mean_; }
    double second_moment() const { return second_moment_; }
    double scv() const { return second_moment_ / (mean_ * mean_) - 1.0; }

    // E[X · 1{X ≤ y}] and E[X² · 1{X ≤ y}].
    double partial_first_moment(double y) const;
    double partial_second_moment(double y) const;
    // Strict variants E[· 1{X < y}]; differ from the above only at atoms.
    double first_moment_below(double y) const;
    double second_moment_below(double y) const;

    double cdf(double y) const;        // P(X ≤ y)
    double cdf_below(double y) const;  // P(X < y)
    double tail(double y) const { return 1.0 - cdf(y); }
    double density(double y) const;    // continuous part only; 0 for atoms

    bool is_discrete() const { return !atoms_.empty(); }
    const std::vector<Atom>& atoms() const { return atoms_; }

    double support_min() const { return support_min_; }
    // +inf for the exponential-tailed variants.
    double support_max() const { return support_max_; }
    // Finite upper cutoff covering all but ~1e-16 of the mass; equals
    // support_max() when that is finite. Numeric integrations stop here.
    double effective_max() const { return effective_max_; }

    // Short token (no commas) naming the variant and parameters, e.g.
    // "bounded_pareto(1.5/1/1e+06)". Used in CSV rows and config echo.
    std::string describe() const;

private:
    SizeDistribution() = default;
    void finalize_moments();

    Kind kind_{Kind::Deterministic};
    // BoundedPareto
    double alpha_ = 0, lower_ = 0, upper_ = 0, norm_ = 1;
    // Hyperexponential / Exponential
    std::vector<double> rates_, probs_, cum_probs_;
    // Discrete variants
    std::vector<Atom> atoms_;  // sorted by size

    double mean_ = 0, second_moment_ = 0;
    double support_min_ = 0, support_max_ = 0, effective_max_ = 0;
};

// rho_y = lambda * E[X · 1{X ≤ y}], the load due to jobs of size ≤ y.
double partial_load(const SizeDistribution& dist, double lambda, double y);

// Offered load and the arrival rate it implies for a unit-total-capacity
// system: lambda = rho / E[X].
struct LoadSpec {
    double rho;
    double arrival_rate;
};
LoadSpec make_load_spec(const SizeDistribution& dist, double rho);

}  // namespace lbsim
