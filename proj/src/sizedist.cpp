#include "lbsim/sizedist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lbsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

SizeDistribution SizeDistribution::bounded_pareto(double alpha, double lower, double upper) {
    require(alpha > 0, "bounded_pareto: alpha must be positive");
    require(lower > 0, "bounded_pareto: lower must be positive");
    require(lower < upper, "bounded_pareto: requires lower < upper");
    SizeDistribution d;
    d.kind_ = Kind::BoundedPareto;
    d.alpha_ = alpha;
    d.lower_ = lower;
    d.upper_ = upper;
    d.norm_ = 1.0 - std::pow(lower / upper, alpha);
    d.support_min_ = lower;
    d.support_max_ = upper;
    d.effective_max_ = upper;
    d.finalize_moments();
    return d;
}

SizeDistribution SizeDistribution::bimodal(double small, double large, double p_small) {
    require(small > 0 && large > 0, "bimodal: sizes must be positive");
    require(small < large, "bimodal: requires small < large");
    require(p_small >= 0 && p_small <= 1, "bimodal: p_small must be in [0,1]");
    SizeDistribution d;
    d.kind_ = Kind::Bimodal;
    d.atoms_ = {{small, p_small}, {large, 1.0 - p_small}};
    d.support_min_ = small;
    d.support_max_ = large;
    d.effective_max_ = large;
    d.finalize_moments();
    return d;
}

SizeDistribution SizeDistribution::hyperexponential(std::vector<double> branch_rates,
                                                    std::vector<double> branch_probs) {
    require(!branch_rates.empty(), "hyperexponential: needs at least one branch");
    require(branch_rates.size() == branch_probs.size(),
            "hyperexponential: branch_rates and branch_probs must have equal length");
    double psum = 0;
    for (double r : branch_rates) require(r > 0, "hyperexponential: rates must be positive");
    for (double p : branch_probs) {
        require(p >= 0 && p <= 1, "hyperexponential: probabilities must be in [0,1]");
        psum += p;
    }
    require(std::abs(psum - 1.0) <= 1e-12, "hyperexponential: probabilities must sum to 1");
    SizeDistribution d;
    d.kind_ = Kind::Hyperexponential;
    d.rates_ = std::move(branch_rates);
    d.probs_ = std::move(branch_probs);
    double acc = 0;
    for (double p : d.probs_) d.cum_probs_.push_back(acc += p);
    d.cum_probs_.back() = 1.0;
    d.support_min_ = 0;
    d.support_max_ = kInf;
    double slowest = *std::min_element(d.rates_.begin(), d.rates_.end());
    d.effective_max_ = 40.0 / slowest;  // exp(-40) ~ 4e-18 of the slowest branch
    d.finalize_moments();
    return d;
}

SizeDistribution SizeDistribution::hyperexponential_fit(double mean, double scv) {
    require(mean > 0, "hyperexponential_fit: mean must be positive");
    require(scv >= 1, "hyperexponential_fit: scv must be >= 1");
    // Balanced means: p1/r1 = p2/r2 = mean/2, so p1 p2 = 1/(2(scv+1)).
    double eta = std::sqrt((scv - 1.0) / (scv + 1.0));
    double p1 = (1.0 + eta) / 2.0;
    double p2 = 1.0 - p1;
    return hyperexponential({2.0 * p1 / mean, 2.0 * p2 / mean}, {p1, p2});
}

SizeDistribution SizeDistribution::exponential(double mean) {
    require(mean > 0, "exponential: mean must be positive");
    SizeDistribution d;
    d.kind_ = Kind::Exponential;
    d.rates_ = {1.0 / mean};
    d.probs_ = {1.0};
    d.cum_probs_ = {1.0};
    d.support_min_ = 0;
    d.support_max_ = kInf;
    d.effective_max_ = 40.0 * mean;
    d.finalize_moments();
    return d;
}

SizeDistribution SizeDistribution::deterministic(double value) {
    require(value > 0, "deterministic: value must be positive");
    SizeDistribution d;
    d.kind_ = Kind::Deterministic;
    d.atoms_ = {{value, 1.0}};
    d.support_min_ = value;
    d.support_max_ = value;
    d.effective_max_ = value;
    d.finalize_moments();
    return d;
}

void SizeDistribution::finalize_moments() {
    if (!atoms_.empty()) {
        std::sort(atoms_.begin(), atoms_.end(),
                  [](const Atom& a, const Atom& b) { return a.size < b.size; });
        mean_ = second_moment_ = 0;
        for (const Atom& a : atoms_) {
            mean_ += a.prob * a.size;
            second_moment_ += a.prob * a.size * a.size;
        }
        return;
    }
    if (kind_ == Kind::BoundedPareto) {
        mean_ = partial_first_moment(upper_);
        second_moment_ = partial_second_moment(upper_);
    } else {
        mean_ = 0;
        second_moment_ = 0;
        for (size_t i = 0; i < rates_.size(); ++i) {
            mean_ += probs_[i] / rates_[i];
            second_moment_ += 2.0 * probs_[i] / (rates_[i] * rates_[i]);
        }
    }
}

double SizeDistribution::sample(RngStream& rng) const {
    switch (kind_) {
        case Kind::BoundedPareto: {
            double u = rng.next_uniform();
            return lower_ * std::pow(1.0 - u * norm_, -1.0 / alpha_);
        }
        case Kind::Bimodal:
            return rng.next_uniform() < atoms_[0].prob ? atoms_[0].size : atoms_[1].size;
        case Kind::Deterministic:
            return atoms_[0].size;
        case Kind::Exponential:
            return rng.next_exponential(1.0 / rates_[0]);
        case Kind::Hyperexponential: {
            double u = rng.next_uniform();
            size_t i = std::lower_bound(cum_probs_.begin(), cum_probs_.end(), u) -
                       cum_probs_.begin();
            if (i >= rates_.size()) i = rates_.size() - 1;
            return rng.next_exponential(1.0 / rates_[i]);
        }
    }
    return 0;  // unreachable
}

double SizeDistribution::partial_first_moment(double y) const {
    if (y <= 0) return 0;
    switch (kind_) {
        case Kind::BoundedPareto: {
            double t = std::clamp(y, lower_, upper_);
            if (std::abs(alpha_ - 1.0) < 1e-12)
                return alpha_ * lower_ * std::log(t / lower_) / norm_;
            return alpha_ * std::pow(lower_, alpha_) *
                   (std::pow(lower_, 1 - alpha_) - std::pow(t, 1 - alpha_)) /
                   ((alpha_ - 1) * norm_);
        }
        case Kind::Bimodal:
        case Kind::Deterministic: {
            double s = 0;
            for (const Atom& a : atoms_)
                if (a.size <= y) s += a.prob * a.size;
            return s;
        }
        case Kind::Exponential:
        case Kind::Hyperexponential: {
            double s = 0;
            for (size_t i = 0; i < rates_.size(); ++i) {
                double m = 1.0 / rates_[i];
                s += probs_[i] * (m - std::exp(-y * rates_[i]) * (m + y));
            }
            return s;
        }
    }
    return 0;
}

double SizeDistribution::partial_second_moment(double y) const {
    if (y <= 0) return 0;
    switch (kind_) {
        case Kind::BoundedPareto: {
            double t = std::clamp(y, lower_, upper_);
            if (std::abs(alpha_ - 2.0) < 1e-12)
                return alpha_ * lower_ * lower_ * std::log(t / lower_) / norm_;
            return alpha_ * std::pow(lower_, alpha_) *
                   (std::pow(t, 2 - alpha_) - std::pow(lower_, 2 - alpha_)) /
                   ((2 - alpha_) * norm_);
        }
        case Kind::Bimodal:
        case Kind::Deterministic: {
            double s = 0;
            for (const Atom& a : atoms_)
                if (a.size <= y) s += a.prob * a.size * a.size;
            return s;
        }
        case Kind::Exponential:
        case Kind::Hyperexponential: {
            double s = 0;
            for (size_t i = 0; i < rates_.size(); ++i) {
                double m = 1.0 / rates_[i];
                s += probs_[i] *
                     (2 * m * m - std::exp(-y * rates_[i]) * (y * y + 2 * m * y + 2 * m * m));
            }
            return s;
        }
    }
    return 0;
}

double SizeDistribution::first_moment_below(double y) const {
    if (atoms_.empty()) return partial_first_moment(y);
    double s = 0;
    for (const Atom& a : atoms_)
        if (a.size < y) s += a.prob * a.size;
    return s;
}

double SizeDistribution::second_moment_below(double y) const {
    if (atoms_.empty()) return partial_second_moment(y);
    double s = 0;
    for (const Atom& a : atoms_)
        if (a.size < y) s += a.prob * a.size * a.size;
    return s;
}

double SizeDistribution::cdf(double y) const {
    if (y < support_min_) return 0;
    switch (kind_) {
        case Kind::BoundedPareto: {
            double t = std::clamp(y, lower_, upper_);
            return (1.0 - std::pow(lower_ / t, alpha_)) / norm_;
        }
        case Kind::Bimodal:
        case Kind::Deterministic: {
            double s = 0;
            for (const Atom& a : atoms_)
                if (a.size <= y) s += a.prob;
            return s;
        }
        case Kind::Exponential:
        case Kind::Hyperexponential: {
            double s = 0;
            for (size_t i = 0; i < rates_.size(); ++i)
                s += probs_[i] * (1.0 - std::exp(-y * rates_[i]));
            return s;
        }
    }
    return 0;
}

double SizeDistribution::cdf_below(double y) const {
    if (atoms_.empty()) return cdf(y);
    double s = 0;
    for (const Atom& a : atoms_)
        if (a.size < y) s += a.prob;
    return s;
}

double SizeDistribution::density(double y) const {
    switch (kind_) {
        case Kind::BoundedPareto:
            if (y < lower_ || y > upper_) return 0;
            return alpha_ * std::pow(lower_, alpha_) * std::pow(y, -alpha_ - 1) / norm_;
        case Kind::Exponential:
        case Kind::Hyperexponential: {
            if (y < 0) return 0;
            double s = 0;
            for (size_t i = 0; i < rates_.size(); ++i)
                s += probs_[i] * rates_[i] * std::exp(-y * rates_[i]);
            return s;
        }
        default:
            return 0;
    }
}

std::string SizeDistribution::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::BoundedPareto:
            os << "bounded_pareto(" << alpha_ << "/" << lower_ << "/" << upper_ << ")";
            break;
        case Kind::Bimodal:
            os << "bimodal(" << atoms_[0].size << "/" << atoms_[1].size << "/" << atoms_[0].prob
               << ")";
            break;
        case Kind::Hyperexponential:
            os << "hyperexp(mean=" << mean_ << "/scv=" << scv() << ")";
            break;
        case Kind::Exponential:
            os << "exponential(" << mean_ << ")";
            break;
        case Kind::Deterministic:
            os << "deterministic(" << atoms_[0].size << ")";
            break;
    }
    return os.str();
}

double partial_load(const SizeDistribution& dist, double lambda, double y) {
    if (y < 0) throw std::invalid_argument("partial_load: y must be >= 0");
    return lambda * dist.partial_first_moment(y);
}

LoadSpec make_load_spec(const SizeDistribution& dist, double rho) {
    if (!(rho > 0 && rho < 1)) throw std::invalid_argument("load: rho must be in (0,1)");
    return LoadSpec{rho, rho / dist.mean()};
}

}  // namespace lbsim
