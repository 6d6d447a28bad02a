#include "lbsim/guardrail.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lbsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int rank_of(double x, double c) {
    if (!(x > 0)) throw std::domain_error("rank_of: x must be positive");
    if (!(c > 1)) throw std::domain_error("rank_of: c must exceed 1");
    int r = static_cast<int>(std::floor(std::log(x) / std::log(c)));
    while (rank_boundary(c, r) > x) --r;
    while (rank_boundary(c, r + 1) <= x) ++r;
    return r;
}

double rank_width(double rho) {
    if (!(rho > 0 && rho < 1)) throw std::domain_error("rank_width: rho must be in (0,1)");
    return 1.0 + 1.0 / (1.0 + std::log(1.0 / (1.0 - rho)));
}

double rank_boundary(double c, int e) { return std::pow(c, static_cast<double>(e)); }

bool GuardrailConfig::heterogeneous() const {
    if (speeds.empty()) return false;
    for (double s : speeds)
        if (s != speeds.front()) return true;
    return false;
}

void GuardrailConfig::validate() const {
    if (!(tightness >= 1)) throw std::invalid_argument("guardrail: tightness g must be >= 1");
    if (!(rank_width > 1 && rank_width <= 2))
        throw std::invalid_argument("guardrail: rank width c must be in (1, 2]");
    if (server_count < 1) throw std::invalid_argument("guardrail: server_count must be >= 1");
    if (!speeds.empty() && static_cast<int>(speeds.size()) != server_count)
        throw std::invalid_argument("guardrail: speeds list must have server_count entries");
    for (double s : speeds)
        if (!(s > 0)) throw std::invalid_argument("guardrail: speeds must be positive");
}

GuardrailState::GuardrailState(GuardrailConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

double GuardrailState::threshold(int rank) const {
    double t = cfg_.tightness * rank_boundary(cfg_.rank_width, rank + 1);
    // Time-unit counters grow by x/mu per dispatch, so the spread limit
    // scales by 1/mu_min; otherwise a slow server's increment could exceed
    // the threshold and empty the safe set.
    if (cfg_.heterogeneous())
        t /= *std::min_element(cfg_.speeds.begin(), cfg_.speeds.end());
    return t;
}

double GuardrailState::dispatch_amount(int server, double x) const {
    if (cfg_.heterogeneous()) return x / cfg_.speeds[server];
    return x;
}

std::vector<double>& GuardrailState::ensure_row(int rank) {
    if (rows_.empty()) {
        base_rank_ = rank;
        rows_.emplace_back(cfg_.server_count, 0.0);
        return rows_.front();
    }
    while (rank < base_rank_) {
        rows_.insert(rows_.begin(), std::vector<double>(cfg_.server_count, 0.0));
        --base_rank_;
    }
    while (rank >= base_rank_ + static_cast<int>(rows_.size()))
        rows_.emplace_back(cfg_.server_count, 0.0);
    return rows_[rank - base_rank_];
}

std::span<const double> GuardrailState::row(int rank) const {
    int i = rank - base_rank_;
    if (i < 0 || i >= static_cast<int>(rows_.size())) return {};
    return rows_[i];
}

std::vector<double> GuardrailState::counters(int rank) const {
    auto r = row(rank);
    if (r.empty()) return std::vector<double>(cfg_.server_count, 0.0);
    return {r.begin(), r.end()};
}

void GuardrailState::safe_set(double x, std::vector<int>& out) const {
    out.clear();
    if (cfg_.tightness == kInf) {
        for (int s = 0; s < cfg_.server_count; ++s) out.push_back(s);
        return;
    }
    int r = rank_of_size(x);
    auto counters_row = row(r);
    if (counters_row.empty()) {
        for (int s = 0; s < cfg_.server_count; ++s) out.push_back(s);
        return;
    }
    double gmin = *std::min_element(counters_row.begin(), counters_row.end());
    double limit = gmin + threshold(r);
    for (int s = 0; s < cfg_.server_count; ++s) {
        // In heterogeneous (time-unit) mode the dispatch amount is x/mu_s.
        if (counters_row[s] + dispatch_amount(s, x) <= limit) out.push_back(s);
    }
    assert(!out.empty());
}

bool GuardrailState::is_safe(double x, int server) const {
    if (cfg_.tightness == kInf) return true;
    int r = rank_of_size(x);
    auto counters_row = row(r);
    if (counters_row.empty()) return true;
    double gmin = *std::min_element(counters_row.begin(), counters_row.end());
    return counters_row[server] + dispatch_amount(server, x) <= gmin + threshold(r);
}

void GuardrailState::record_dispatch(int server, double x) {
    assert(server >= 0 && server < cfg_.server_count);
    assert(is_safe(x, server));
    if (cfg_.tightness == kInf) return;  // unrestricted sentinel keeps no counters
    ensure_row(rank_of_size(x))[server] += dispatch_amount(server, x);
}

void GuardrailState::reset(int server) {
    for (auto& row : rows_) {
        double m = *std::min_element(row.begin(), row.end());
        row[server] = m;
    }
}

std::vector<TightnessViolation> GuardrailState::check_tightness() const {
    std::vector<TightnessViolation> out;
    if (cfg_.tightness == kInf) return out;
    for (int i = 0; i < static_cast<int>(rows_.size()); ++i) {
        const auto& row = rows_[i];
        int rank = base_rank_ + i;
        double limit = threshold(rank);
        auto lo = std::min_element(row.begin(), row.end());
        auto hi = std::max_element(row.begin(), row.end());
        double tol = 1e-9 * limit + 1e-12 * (std::abs(*hi) + std::abs(*lo));
        if (*hi - *lo > limit + tol) {
            out.push_back({rank, static_cast<int>(lo - row.begin()),
                           static_cast<int>(hi - row.begin()), *hi - *lo, limit});
        }
    }
    return out;
}

double GuardrailState::rank_tightness_excess(int rank) const {
    if (cfg_.tightness == kInf) return -kInf;
    auto r = row(rank);
    if (r.empty()) return -kInf;
    auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    double limit = threshold(rank);
    double tol = 1e-9 * limit + 1e-12 * (std::abs(*hi) + std::abs(*lo));
    return (*hi - *lo) - limit - tol;
}

void GuardrailState::renormalize() {
    for (auto& row : rows_) {
        double m = *std::min_element(row.begin(), row.end());
        if (m > 0)
            for (double& v : row) v -= m;
    }
}

std::vector<TightnessViolation> check_group_tightness(
    std::span<const GuardrailState* const> states, double g_sum) {
    std::vector<TightnessViolation> out;
    if (states.empty()) return out;
    double c = states.front()->config().rank_width;
    int k = states.front()->config().server_count;
    int rmin = std::numeric_limits<int>::max(), rmax = std::numeric_limits<int>::min();
    for (const auto* st : states) {
        rmin = std::min(rmin, st->stored_rank_min());
        rmax = std::max(rmax, st->stored_rank_max());
    }
    std::vector<double> sum(k);
    for (int r = rmin; r <= rmax; ++r) {
        std::fill(sum.begin(), sum.end(), 0.0);
        bool any = false;
        for (const auto* st : states) {
            auto row = st->row(r);
            if (row.empty()) continue;
            any = true;
            for (int s = 0; s < k; ++s) sum[s] += row[s];
        }
        if (!any) continue;
        double limit = g_sum * rank_boundary(c, r + 1);
        auto lo = std::min_element(sum.begin(), sum.end());
        auto hi = std::max_element(sum.begin(), sum.end());
        double tol = 1e-9 * limit + 1e-12 * (std::abs(*hi) + std::abs(*lo));
        if (*hi - *lo > limit + tol) {
            out.push_back({r, static_cast<int>(lo - sum.begin()),
                           static_cast<int>(hi - sum.begin()), *hi - *lo, limit});
        }
    }
    return out;
}

ClassGuardrailState::ClassGuardrailState(std::vector<double> boundaries, int server_count)
    : bounds_(std::move(boundaries)) {
    if (bounds_.size() < 2) throw std::invalid_argument("class guardrail: need >= 2 boundaries");
    for (size_t i = 1; i < bounds_.size(); ++i)
        if (!(bounds_[i] > bounds_[i - 1]))
            throw std::invalid_argument("class guardrail: boundaries must be increasing");
    if (server_count < 1) throw std::invalid_argument("class guardrail: server_count must be >= 1");
    counters_.assign(bounds_.size() - 1, std::vector<double>(server_count, 0.0));
}

int ClassGuardrailState::class_of(double x) const {
    if (!(x > bounds_.front()) || x > bounds_.back())
        throw std::domain_error("class guardrail: size outside covered range");
    auto it = std::lower_bound(bounds_.begin() + 1, bounds_.end(), x);
    return static_cast<int>(it - bounds_.begin()) - 1;
}

void ClassGuardrailState::class_safe_set(double x, std::vector<int>& out) const {
    out.clear();
    int cls = class_of(x);
    const auto& row = counters_[cls];
    double gmin = *std::min_element(row.begin(), row.end());
    double limit = gmin + bounds_[cls + 1];
    for (int s = 0; s < static_cast<int>(row.size()); ++s)
        if (row[s] + x <= limit) out.push_back(s);
    assert(!out.empty());
}

void ClassGuardrailState::record_dispatch(int server, double x) {
    counters_[class_of(x)][server] += x;
}

void ClassGuardrailState::reset(int server) {
    for (auto& row : counters_) {
        double m = *std::min_element(row.begin(), row.end());
        row[server] = m;
    }
}

std::vector<TightnessViolation> ClassGuardrailState::check() const {
    std::vector<TightnessViolation> out;
    for (int c = 0; c < class_count(); ++c) {
        const auto& row = counters_[c];
        double limit = bounds_[c + 1];
        auto lo = std::min_element(row.begin(), row.end());
        auto hi = std::max_element(row.begin(), row.end());
        double tol = 1e-9 * limit + 1e-12 * (std::abs(*hi) + std::abs(*lo));
        if (*hi - *lo > limit + tol)
            out.push_back({c, static_cast<int>(lo - row.begin()),
                           static_cast<int>(hi - row.begin()), *hi - *lo, limit});
    }
    return out;
}

std::vector<double> ClassGuardrailState::counters(int cls) const { return counters_[cls]; }

}  // namespace lbsim
