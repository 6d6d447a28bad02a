#include "lbsim/gridrun.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "lbsim/analytic.hpp"
#include "lbsim/guardrail.hpp"

namespace lbsim {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return "unstable";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

SizeDistribution parse_dist(const json& j) {
    if (!j.is_object() || !j.contains("name"))
        throw std::invalid_argument("config: dist must be an object with a name");
    std::string name = j.at("name").get<std::string>();
    auto need = [&](const char* field) -> double {
        if (!j.contains(field))
            throw std::invalid_argument(std::string("config: dist ") + name +
                                        " missing field " + field);
        return j.at(field).get<double>();
    };
    if (name == "bounded_pareto")
        return SizeDistribution::bounded_pareto(need("alpha"), need("lower"), need("upper"));
    if (name == "bimodal")
        return SizeDistribution::bimodal(need("small"), need("large"), need("p_small"));
    if (name == "hyperexp") {
        if (j.contains("rates"))
            return SizeDistribution::hyperexponential(
                j.at("rates").get<std::vector<double>>(),
                j.at("probs").get<std::vector<double>>());
        return SizeDistribution::hyperexponential_fit(need("mean"), need("scv"));
    }
    if (name == "exponential") return SizeDistribution::exponential(need("mean"));
    if (name == "deterministic") return SizeDistribution::deterministic(need("value"));
    throw std::invalid_argument("config: unknown dist name: " + name);
}

PolicyChoice parse_policy(const json& j) {
    if (j.is_string()) return policy_choice_from_string(j.get<std::string>());
    if (j.is_object() && j.contains("name")) {
        PolicyChoice p = policy_choice_from_string(j.at("name").get<std::string>());
        if (p.kind == PolicyKind::JsqD && j.contains("d")) p.d = j.at("d").get<int>();
        return p;
    }
    throw std::invalid_argument("config: policy must be a name or object with a name");
}

std::optional<DelaySpec> parse_delay(const json& j) {
    if (j.is_null()) return std::nullopt;
    DelaySpec d;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "deterministic")
        d.kind = DelaySpec::Kind::Deterministic;
    else if (kind == "exponential")
        d.kind = DelaySpec::Kind::Exponential;
    else
        throw std::invalid_argument("config: reset_delay kind must be deterministic|exponential");
    d.value = j.at("value").get<double>();
    return d;
}

}  // namespace

PolicyChoice policy_choice_from_string(const std::string& name) {
    PolicyChoice p;
    if (name == "random") {
        p.kind = PolicyKind::Random;
    } else if (name == "rr") {
        p.kind = PolicyKind::RoundRobin;
    } else if (name == "lwl") {
        p.kind = PolicyKind::Lwl;
    } else if (name == "jsq") {
        p.kind = PolicyKind::Jsq;
    } else if (name.rfind("jsq-", 0) == 0) {
        p.kind = PolicyKind::JsqD;
        p.d = std::stoi(name.substr(4));
    } else if (name == "sita-e") {
        p.kind = PolicyKind::SitaE;
    } else {
        throw std::invalid_argument("config: unknown policy: " + name);
    }
    return p;
}

PolicySpec PolicyChoice::prepare(const SizeDistribution& dist, double lambda, int k) const {
    switch (kind) {
        case PolicyKind::Random: return PolicySpec::random();
        case PolicyKind::RoundRobin: return PolicySpec::round_robin();
        case PolicyKind::Lwl: return PolicySpec::lwl();
        case PolicyKind::Jsq: return PolicySpec::jsq();
        case PolicyKind::JsqD: return PolicySpec::jsq_d(d);
        case PolicyKind::SitaE: return PolicySpec::sita_e(dist, lambda, k);
    }
    return PolicySpec::random();
}

std::string PolicyChoice::name() const {
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

ExperimentGrid parse_grid_config(const std::string& json_text) {
    json j = json::parse(json_text);
    ExperimentGrid grid;
    SimConfig& b = grid.base;
    if (j.contains("k")) b.k = j.at("k").get<int>();
    if (j.contains("dist")) b.dist = parse_dist(j.at("dist"));
    if (j.contains("rho")) b.rho = j.at("rho").get<double>();
    if (j.contains("guarded")) b.guarded = j.at("guarded").get<bool>();
    if (j.contains("g")) b.g = j.at("g").get<double>();
    if (j.contains("scheduling"))
        b.scheduling = discipline_from_string(j.at("scheduling").get<std::string>());
    if (j.contains("trials")) b.trials = j.at("trials").get<int>();
    if (j.contains("jobs_per_trial")) b.jobs_per_trial = j.at("jobs_per_trial").get<std::int64_t>();
    if (j.contains("warmup_fraction")) b.warmup_fraction = j.at("warmup_fraction").get<double>();
    if (j.contains("seed")) b.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("dispatchers")) b.dispatchers = j.at("dispatchers").get<int>();
    if (j.contains("reset_delay")) b.reset_delay = parse_delay(j.at("reset_delay"));
    if (j.contains("resets")) b.resets_enabled = j.at("resets").get<bool>();
    if (j.contains("speeds")) b.speeds = j.at("speeds").get<std::vector<double>>();
    if (j.contains("assert_invariants")) b.assert_invariants = j.at("assert_invariants").get<bool>();
    if (j.contains("policy")) grid.base_policy = parse_policy(j.at("policy"));

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        if (s.contains("rho")) grid.rho_values = s.at("rho").get<std::vector<double>>();
        if (s.contains("policy"))
            for (const json& p : s.at("policy")) grid.policies.push_back(parse_policy(p));
        if (s.contains("guarded"))
            for (bool v : s.at("guarded").get<std::vector<bool>>())
                grid.guarded_values.push_back(v ? 1 : 0);
        if (s.contains("g")) grid.g_values = s.at("g").get<std::vector<double>>();
        if (s.contains("scheduling"))
            for (const json& d : s.at("scheduling"))
                grid.sched_values.push_back(discipline_from_string(d.get<std::string>()));
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        if (o.contains("csv")) grid.out_csv = o.at("csv").get<std::string>();
        if (o.contains("json")) grid.out_json = o.at("json").get<std::string>();
    }
    return grid;
}

std::vector<CellResult> run_grid(const ExperimentGrid& grid) {
    auto axis_or = [](auto values, auto fallback) {
        if (values.empty()) values.push_back(fallback);
        return values;
    };
    std::vector<double> rhos = axis_or(grid.rho_values, grid.base.rho);
    std::vector<PolicyChoice> pols = grid.policies.empty()
                                         ? std::vector<PolicyChoice>{grid.base_policy}
                                         : grid.policies;
    std::vector<int> guards = axis_or(grid.guarded_values, grid.base.guarded ? 1 : 0);
    std::vector<double> gs = axis_or(grid.g_values, grid.base.g);
    std::vector<Discipline> scheds = axis_or(grid.sched_values, grid.base.scheduling);

    std::vector<CellResult> cells;
    for (double rho : rhos)
        for (const PolicyChoice& pol : pols)
            for (int guarded : guards)
                for (double g : gs)
                    for (Discipline sched : scheds) {
                        CellResult cell;
                        cell.config = grid.base;
                        cell.config.rho = rho;
                        cell.config.guarded = guarded != 0;
                        cell.config.g = g;
                        cell.config.scheduling = sched;
                        cell.policy_name = pol.name();
                        try {
                            cell.config.policy = pol.prepare(
                                cell.config.dist, cell.config.arrival_rate(), cell.config.k);
                            cell.config.validate();
                            cell.c = cell.config.rank_width_value();
                        } catch (const std::exception& e) {
                            cell.invalid = true;
                            cell.error = e.what();
                        }
                        cells.push_back(std::move(cell));
                    }

    // One cell: parallelize trials. Many cells: parallelize across cells.
    int par = std::max(1, grid.base.parallelism);
    if (cells.size() == 1) {
        CellResult& cell = cells.front();
        if (!cell.invalid) {
            try {
                cell.stats = run_experiment(cell.config);
            } catch (const TrialAbort& e) {
                cell.aborted = true;
                cell.error = e.what();
            }
        }
        return cells;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            CellResult& cell = cells[i];
            if (cell.invalid) continue;
            SimConfig cfg = cell.config;
            cfg.parallelism = 1;
            try {
                cell.stats = run_experiment(cfg);
            } catch (const TrialAbort& e) {
                cell.aborted = true;
                cell.error = e.what();
            }
        }
    };
    if (par == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < par; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return cells;
}

std::string results_csv(const std::vector<CellResult>& results) {
    std::ostringstream os;
    os << "rho,k,dist,policy,guarded,g,c,scheduling,dispatchers,trials,jobs_per_trial,"
          "mean_T,ci95_halfwidth,completed,violations\n";
    for (const CellResult& r : results) {
        const SimConfig& c = r.config;
        os << fmt(c.rho) << ',' << c.k << ',' << c.dist.describe() << ',' << r.policy_name
           << ',' << (c.guarded ? 1 : 0) << ',' << fmt(c.g) << ',' << fmt(r.c) << ','
           << to_string(c.scheduling) << ',' << c.dispatchers << ',' << c.trials << ','
           << c.jobs_per_trial << ',';
        if (r.invalid || r.aborted)
            os << "unstable,unstable,0,";
        else
            os << fmt(r.stats.mean_T) << ',' << fmt(r.stats.ci_halfwidth_95) << ','
               << r.stats.completed << ',';
        os << (r.invalid ? 0 : r.stats.violations) << '\n';
    }
    return os.str();
}

std::vector<std::map<std::string, std::string>> parse_csv(const std::string& text) {
    std::vector<std::map<std::string, std::string>> rows;
    std::istringstream is(text);
    std::string line;
    std::vector<std::string> header;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        out.push_back(cur);
        return out;
    };
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header.empty()) {
            header = split(line);
            continue;
        }
        auto cols = split(line);
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < header.size() && i < cols.size(); ++i)
            row[header[i]] = cols[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sidecar_json(const ExperimentGrid& grid, const std::vector<CellResult>& results) {
    json j;
    j["version"] = "1.0";
    j["seed"] = grid.base.seed;
    j["k"] = grid.base.k;
    j["dist"] = grid.base.dist.describe();
    j["dispatchers"] = grid.base.dispatchers;
    j["trials"] = grid.base.trials;
    j["jobs_per_trial"] = grid.base.jobs_per_trial;
    j["warmup_fraction"] = grid.base.warmup_fraction;
    j["assert_invariants"] = grid.base.assert_invariants;
    j["resets_enabled"] = grid.base.resets_enabled;
    if (grid.base.reset_delay) {
        j["reset_delay"] = {
            {"kind", grid.base.reset_delay->kind == DelaySpec::Kind::Exponential
                         ? "exponential"
                         : "deterministic"},
            {"value", grid.base.reset_delay->value}};
    }
    json cells = json::array();
    for (const CellResult& r : results) {
        json c;
        c["rho"] = r.config.rho;
        c["policy"] = r.policy_name;
        c["guarded"] = r.config.guarded;
        c["g"] = std::isinf(r.config.g) ? -1.0 : r.config.g;
        c["rank_width"] = r.c;
        c["scheduling"] = to_string(r.config.scheduling);
        c["trial_seeds"] = {r.config.seed, r.config.seed + r.config.trials - 1};
        if (r.config.policy.kind == PolicyKind::SitaE)
            c["sita_cutoffs"] = r.config.policy.sita.cutoffs;
        if (r.invalid || r.aborted) {
            c["error"] = r.error;
        } else {
            c["mean_T"] = r.stats.mean_T;
            c["ci95_halfwidth"] = r.stats.ci_halfwidth_95;
            c["completed"] = r.stats.completed;
            c["invariants"] = {{"violations", r.stats.violations},
                               {"max_tightness_violation", r.stats.max_tightness_violation},
                               {"resets_applied", r.stats.resets_applied},
                               {"resets_ignored", r.stats.resets_ignored}};
        }
        cells.push_back(std::move(c));
    }
    j["cells"] = std::move(cells);
    return j.dump(2);
}

std::string bound_report_csv(const std::string& json_text) {
    json j = json::parse(json_text);
    SizeDistribution dist = parse_dist(j.at("dist"));
    int k = j.value("k", 10);
    double g = j.value("g", 1.0);
    std::vector<double> rhos = j.at("rho").get<std::vector<double>>();
    bool simulate = j.value("simulate", false);

    std::ostringstream os;
    os << "rho,k,dist,g,c,mean_bound,mg1_srpt,mg1_psjf,mg1_fcfs,mg1_prio,sim_policy,"
          "sim_mean_T,sim_ci95\n";
    for (double rho : rhos) {
        LoadSpec load = make_load_spec(dist, rho);  // rejects rho outside (0,1)
        double c = rank_width(rho);
        BoundInputs in{&dist, load.arrival_rate, static_cast<double>(k), g, c};
        os << fmt(rho) << ',' << k << ',' << dist.describe() << ',' << fmt(g) << ',' << fmt(c)
           << ',' << fmt(mean_guarded_prio_bound(in)) << ','
           << fmt(mean_mg1_response(dist, load.arrival_rate, Discipline::Srpt)) << ','
           << fmt(mean_mg1_response(dist, load.arrival_rate, Discipline::Psjf)) << ','
           << fmt(mean_mg1_response(dist, load.arrival_rate, Discipline::Fcfs)) << ','
           << fmt(mean_mg1_response(dist, load.arrival_rate, Discipline::Prio, c)) << ',';
        if (simulate) {
            SimConfig cfg;
            cfg.k = k;
            cfg.dist = dist;
            cfg.rho = rho;
            cfg.guarded = true;
            cfg.g = g;
            cfg.scheduling = Discipline::Srpt;
            cfg.trials = j.value("trials", 10);
            cfg.jobs_per_trial = j.value("jobs_per_trial", static_cast<std::int64_t>(1000000));
            cfg.seed = j.value("seed", 1);
            cfg.parallelism = j.value("parallelism", 1);
            PolicyChoice pol = j.contains("policy") ? parse_policy(j.at("policy"))
                                                    : policy_choice_from_string("lwl");
            cfg.policy = pol.prepare(dist, load.arrival_rate, k);
            try {
                RunStats stats = run_experiment(cfg);
                os << pol.name() << ',' << fmt(stats.mean_T) << ','
                   << fmt(stats.ci_halfwidth_95);
            } catch (const TrialAbort&) {
                os << pol.name() << ",unstable,unstable";
            }
        } else {
            os << ",,";
        }
        os << '\n';
    }
    return os.str();
}

int exit_code_for(const std::vector<CellResult>& results) {
    for (const CellResult& r : results)
        if (r.invalid || r.stats.violations > 0) return 1;
    return 0;
}

}  // namespace lbsim
