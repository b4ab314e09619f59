#include "assortinf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace assortinf {

namespace {

using nlohmann::json;

int parse_int(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        throw ValidationError("expected an integer in '" + context + "', got '" + s + "'");
    }
    if (used != s.size()) {
        throw ValidationError("expected an integer in '" + context + "', got '" + s + "'");
    }
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

// Runs fn(0..count-1) on up to `jobs` threads. Results land by index.
template <class T>
std::vector<T> parallel_map(int count, int jobs, const std::function<T(int)>& fn) {
    std::vector<T> out(static_cast<std::size_t>(count));
    const int workers = std::max(1, std::min(jobs, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    out[static_cast<std::size_t>(i)] = fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::string csv_safe(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '"', '\'');
    return s;
}

void check_exclusions(int excluded, int reps, double limit, const std::string& where) {
    if (static_cast<double>(excluded) > limit * static_cast<double>(reps)) {
        throw ExperimentError(where + ": " + std::to_string(excluded) + " of " +
                              std::to_string(reps) + " replications failed");
    }
}

struct CiOutcome {
    bool ok = false;
    std::string error;
    ConfidenceInterval ci;
};

CiOutcome ci_replication(const ExperimentConfig& config, int k_star, int L, int rep) {
    ScenarioSpec spec = config.scenario;
    spec.k_star_target = k_star;
    spec.L = L;
    CiOutcome out;
    try {
        ReplicationStreams streams =
            replication_streams(config.master_seed, static_cast<std::uint64_t>(rep));
        const SimulatedInstance inst = simulate_instance(spec, streams);
        InferenceConfig ic;
        ic.lambda = default_lambda(spec.n, spec.p, L, config.lambda_c);
        ic.alpha = config.alpha;
        ic.B = config.B;
        const InferenceResult res = run_inference(inst.data, inst.truth.revenues, ic, streams.bootstrap);
        out.ok = true;
        out.ci = res.ci;
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<int> int_array(const json& doc, const char* name) {
    const json& v = doc.at(name);
    if (!v.is_array()) throw ParseError(std::string("field '") + name + "' must be an array");
    std::vector<int> out;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!v[j].is_number_integer()) {
            throw ParseError(std::string("'") + name + "[" + std::to_string(j) +
                             "]' must be an integer");
        }
        out.push_back(v[j].get<int>());
    }
    return out;
}

template <class T>
void read_number(const json& doc, const char* name, T& target) {
    if (!doc.contains(name)) return;
    const json& v = doc.at(name);
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            throw ParseError(std::string("field '") + name + "' must be an integer");
        }
    } else if (!v.is_number()) {
        throw ParseError(std::string("field '") + name + "' must be a number");
    }
    target = v.get<T>();
}

HypothesisSpec hypothesis_from_json(const json& h) {
    if (!h.is_object()) throw ParseError("field 'hypothesis' must be an object");
    HypothesisSpec spec;
    if (!h.contains("example") || !h.at("example").is_string()) {
        throw ParseError("field 'hypothesis.example' must be a string");
    }
    spec.example = h.at("example").get<std::string>();
    read_number(h, "i", spec.i);
    read_number(h, "q", spec.q);
    read_number(h, "n0", spec.n0);
    if (h.contains("A")) spec.A = int_array(h, "A");
    if (h.contains("k0")) spec.k0 = int_array(h, "k0");
    if (h.contains("partition")) {
        const json& p = h.at("partition");
        if (!p.is_array()) throw ParseError("field 'hypothesis.partition' must be an array");
        for (std::size_t b = 0; b < p.size(); ++b) {
            json wrap;
            wrap["block"] = p[b];
            spec.partition.push_back(int_array(wrap, "block"));
        }
    }
    return spec;
}

json hypothesis_to_json(const HypothesisSpec& h) {
    json doc;
    doc["example"] = h.example;
    doc["i"] = h.i;
    doc["A"] = h.A;
    doc["q"] = h.q;
    doc["partition"] = h.partition;
    doc["n0"] = h.n0;
    doc["k0"] = h.k0;
    return doc;
}

}  // namespace

PropertySet build_property_set(const HypothesisSpec& spec, int n) {
    try {
        if (spec.example == "example1") return k0_example1(n, spec.i);
        if (spec.example == "example2") return k0_example2(n, spec.A);
        if (spec.example == "example3") return k0_example3(n, spec.A);
        if (spec.example == "example4") return k0_example4(n, spec.A, spec.q);
        if (spec.example == "example5") return k0_example5(n, spec.partition);
        if (spec.example == "example6") return k0_example6(n, spec.partition, spec.n0);
        if (spec.example == "k0") return PropertySet(n, spec.k0, "explicit K0");
    } catch (const DomainError& e) {
        throw ValidationError(spec.example + ": " + e.what());
    }
    throw ValidationError("unknown hypothesis '" + spec.example +
                          "' (expected example1..example6 or k0)");
}

std::vector<int> parse_index_list(const std::string& text) {
    std::vector<int> out;
    if (trim(text).empty()) return out;
    for (const std::string& raw : split(text, ',')) {
        const std::string part = trim(raw);
        const auto dash = part.find('-', 1);
        if (dash == std::string::npos) {
            out.push_back(parse_int(part, text));
            continue;
        }
        const int lo = parse_int(trim(part.substr(0, dash)), text);
        const int hi = parse_int(trim(part.substr(dash + 1)), text);
        if (hi < lo) throw ValidationError("empty range '" + part + "'");
        for (int i = lo; i <= hi; ++i) out.push_back(i);
    }
    return out;
}

Partition parse_partition(const std::string& text) {
    Partition p;
    for (const std::string& block : split(text, ';')) p.push_back(parse_index_list(block));
    return p;
}

void ExperimentConfig::validate() const {
    try {
        scenario.validate();
    } catch (const DomainError& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (!(lambda_c > 0.0)) throw ValidationError("lambda_c must be positive");
    if (B < 2) throw ValidationError("B must be at least 2");
    if (reps < 1) throw ValidationError("reps must be at least 1");
    if (L_grid.empty()) throw ValidationError("L_grid must be nonempty");
    if (K_star_grid.empty()) throw ValidationError("K_star_grid must be nonempty");
    for (int L : L_grid) {
        if (L < 1) throw ValidationError("L_grid entries must be positive");
    }
    for (int k : K_star_grid) {
        if (k < 1 || k > scenario.n) throw ValidationError("K_star_grid entries must lie in 1..n");
    }
    if (jobs < 1) throw ValidationError("jobs must be at least 1");
    if (hypothesis) build_property_set(*hypothesis, scenario.n);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("config must be a JSON object");

    ExperimentConfig c;
    bool p_given = false;
    bool k_given = false;
    if (doc.contains("scenario")) {
        const json& s = doc.at("scenario");
        if (!s.is_object()) throw ParseError("field 'scenario' must be an object");
        read_number(s, "n", c.scenario.n);
        read_number(s, "sigma_theta_sq", c.scenario.sigma_theta_sq);
        k_given = s.contains("k_star_target");
        read_number(s, "k_star_target", c.scenario.k_star_target);
        read_number(s, "delta_magnitude", c.scenario.delta_magnitude);
        read_number(s, "L", c.scenario.L);
        if (s.contains("p") && !s.at("p").is_null()) {
            read_number(s, "p", c.scenario.p);
            p_given = true;
        }
    }
    if (!p_given) c.scenario.p = default_selection_probability(c.scenario.n);
    read_number(doc, "lambda_c", c.lambda_c);
    read_number(doc, "alpha", c.alpha);
    read_number(doc, "B", c.B);
    read_number(doc, "reps", c.reps);
    read_number(doc, "master_seed", c.master_seed);
    read_number(doc, "jobs", c.jobs);
    read_number(doc, "max_excluded_fraction", c.max_excluded_fraction);
    // Absent grids fall back to the scenario values; explicit empty grids are invalid.
    c.L_grid = doc.contains("L_grid") ? int_array(doc, "L_grid") : std::vector<int>{c.scenario.L};
    c.K_star_grid = doc.contains("K_star_grid") ? int_array(doc, "K_star_grid")
                                                : std::vector<int>{c.scenario.k_star_target};
    if (!k_given && !c.K_star_grid.empty()) c.scenario.k_star_target = c.K_star_grid.front();
    if (doc.contains("hypothesis") && !doc.at("hypothesis").is_null()) {
        c.hypothesis = hypothesis_from_json(doc.at("hypothesis"));
    }
    if (doc.contains("output_path")) {
        if (!doc.at("output_path").is_string()) {
            throw ParseError("field 'output_path' must be a string");
        }
        c.output_path = doc.at("output_path").get<std::string>();
    }
    c.scenario.seed = c.master_seed;
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return experiment_config_from_json(buf.str());
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
    json doc;
    doc["scenario"] = {{"n", c.scenario.n},
                       {"sigma_theta_sq", c.scenario.sigma_theta_sq},
                       {"k_star_target", c.scenario.k_star_target},
                       {"delta_magnitude", c.scenario.delta_magnitude},
                       {"p", c.scenario.p},
                       {"L", c.scenario.L}};
    doc["lambda_c"] = c.lambda_c;
    doc["alpha"] = c.alpha;
    doc["B"] = c.B;
    doc["reps"] = c.reps;
    doc["L_grid"] = c.L_grid;
    doc["K_star_grid"] = c.K_star_grid;
    doc["hypothesis"] = c.hypothesis ? hypothesis_to_json(*c.hypothesis) : json(nullptr);
    doc["output_path"] = c.output_path;
    doc["master_seed"] = c.master_seed;
    doc["jobs"] = c.jobs;
    doc["max_excluded_fraction"] = c.max_excluded_fraction;
    return doc.dump(2);
}

ReplicationStreams replication_streams(std::uint64_t master_seed, std::uint64_t rep) {
    const Rng root(split_seed(master_seed, rep));
    return {root.split(1), root.split(2), root.split(3), root.split(4)};
}

SimulatedInstance simulate_instance(const ScenarioSpec& spec, ReplicationStreams& streams) {
    Scenario truth = make_scenario(spec, streams.scenario);
    std::vector<Assortment> sets = sample_offer_sets(spec.n, spec.p, streams.sets);
    ObservedDataset data =
        simulate_choices(truth.theta, std::move(sets), spec.L, streams.choices, spec.p);
    return {std::move(truth), std::move(data)};
}

QqResult run_qq(const ExperimentConfig& config) {
    config.validate();
    const ScenarioSpec& spec = config.scenario;
    const double lambda = default_lambda(spec.n, spec.p, spec.L, config.lambda_c);

    QqResult result;
    result.rows = parallel_map<QqRow>(config.reps, config.jobs, [&](int rep) {
        QqRow row;
        row.rep = rep;
        try {
            ReplicationStreams streams =
                replication_streams(config.master_seed, static_cast<std::uint64_t>(rep));
            const SimulatedInstance inst = simulate_instance(spec, streams);
            const LikelihoodWorkspace w(inst.data, lambda);
            const FitResult fit = fit_mle(w, {});
            const HessianPseudoinverse hdag = hessian_pseudoinverse(hessian(w, fit.theta));
            const PreferenceVector theta_d = debias(w, fit.theta, hdag);
            const GapEstimates g =
                gap_estimates(theta_d, fit.theta, inst.truth.revenues, hdag, spec.L);
            const double target = inst.truth.theta[1] - inst.truth.theta.mean();
            row.std_theta_d_1 =
                (theta_d[1] - target) / std::sqrt(hdag.matrix(1, 1) / static_cast<double>(spec.L));
            row.std_delta_1 = (g.delta_hat[0] - inst.truth.delta.values[0]) / g.sd[0];
        } catch (const Error& e) {
            row.error = e.what();
        }
        return row;
    });

    std::vector<double> th;
    std::vector<double> de;
    for (const QqRow& row : result.rows) {
        if (!row.error.empty()) {
            ++result.excluded;
            continue;
        }
        th.push_back(row.std_theta_d_1);
        de.push_back(row.std_delta_1);
    }
    check_exclusions(result.excluded, config.reps, config.max_excluded_fraction, "qq");
    if (!th.empty()) {
        result.ks_theta_d_1 = ks_test_standard_normal(th);
        result.ks_delta_1 = ks_test_standard_normal(de);
    }
    return result;
}

std::vector<CoverageRow> run_coverage(const ExperimentConfig& config) {
    config.validate();
    const int cells = static_cast<int>(config.K_star_grid.size() * config.L_grid.size());
    const int reps = config.reps;
    const auto outcomes = parallel_map<CiOutcome>(cells * reps, config.jobs, [&](int job) {
        const int cell = job / reps;
        const int k_star = config.K_star_grid[static_cast<std::size_t>(cell) / config.L_grid.size()];
        const int L = config.L_grid[static_cast<std::size_t>(cell) % config.L_grid.size()];
        return ci_replication(config, k_star, L, job % reps);
    });

    std::vector<CoverageRow> rows;
    for (int cell = 0; cell < cells; ++cell) {
        CoverageRow row;
        row.k_star = config.K_star_grid[static_cast<std::size_t>(cell) / config.L_grid.size()];
        row.L = config.L_grid[static_cast<std::size_t>(cell) % config.L_grid.size()];
        row.reps = reps;
        int covered = 0;
        double width = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            const CiOutcome& o = outcomes[static_cast<std::size_t>(cell * reps + rep)];
            if (!o.ok) {
                ++row.excluded;
                continue;
            }
            covered += o.ci.contains(row.k_star) ? 1 : 0;
            width += o.ci.width();
        }
        const int used = reps - row.excluded;
        check_exclusions(row.excluded, reps, config.max_excluded_fraction,
                         "coverage cell K* = " + std::to_string(row.k_star) +
                             ", L = " + std::to_string(row.L));
        row.coverage = used > 0 ? static_cast<double>(covered) / used : 0.0;
        row.mean_width = used > 0 ? width / used : 0.0;
        rows.push_back(row);
    }
    return rows;
}

std::vector<PowerRow> run_power(const ExperimentConfig& config) {
    config.validate();
    if (!config.hypothesis) throw ValidationError("power experiments need a hypothesis");
    const PropertySet k0 = build_property_set(*config.hypothesis, config.scenario.n);
    if (k0.empty()) throw ValidationError("hypothesis has an empty K0; distances are undefined");
    std::set<int> seen;
    for (int k : config.K_star_grid) {
        if (!seen.insert(distance_to(k, k0)).second) {
            throw ValidationError("K_star_grid has two entries at distance " +
                                  std::to_string(distance_to(k, k0)) + " from K0");
        }
    }

    const int cells = static_cast<int>(config.K_star_grid.size() * config.L_grid.size());
    const int reps = config.reps;
    const auto outcomes = parallel_map<CiOutcome>(cells * reps, config.jobs, [&](int job) {
        const int cell = job / reps;
        const int k_star = config.K_star_grid[static_cast<std::size_t>(cell) / config.L_grid.size()];
        const int L = config.L_grid[static_cast<std::size_t>(cell) % config.L_grid.size()];
        return ci_replication(config, k_star, L, job % reps);
    });

    std::vector<PowerRow> rows;
    for (int cell = 0; cell < cells; ++cell) {
        PowerRow row;
        row.example_id = config.hypothesis->id();
        row.k_star = config.K_star_grid[static_cast<std::size_t>(cell) / config.L_grid.size()];
        row.d = distance_to(row.k_star, k0);
        row.L = config.L_grid[static_cast<std::size_t>(cell) % config.L_grid.size()];
        row.reps = reps;
        int rejected = 0;
        for (int rep = 0; rep < reps; ++rep) {
            const CiOutcome& o = outcomes[static_cast<std::size_t>(cell * reps + rep)];
            if (!o.ok) {
                ++row.excluded;
                continue;
            }
            rejected += test_property(o.ci, k0).decision == Decision::Reject ? 1 : 0;
        }
        const int used = reps - row.excluded;
        check_exclusions(row.excluded, reps, config.max_excluded_fraction,
                         "power cell d = " + std::to_string(row.d) +
                             ", L = " + std::to_string(row.L));
        row.reject_rate = used > 0 ? static_cast<double>(rejected) / used : 0.0;
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const PowerRow& a, const PowerRow& b) {
        return a.d != b.d ? a.d < b.d : a.L < b.L;
    });
    return rows;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_qq_csv(const QqResult& result, std::ostream& out) {
    out << "rep,std_theta_d_1,std_delta_1,error\n";
    for (const QqRow& row : result.rows) {
        out << row.rep << ',';
        if (row.error.empty()) {
            out << format_double(row.std_theta_d_1) << ',' << format_double(row.std_delta_1)
                << ",\n";
        } else {
            out << ",," << csv_safe(row.error) << '\n';
        }
    }
}

void write_coverage_csv(const std::vector<CoverageRow>& rows, std::ostream& out) {
    out << "k_star,L,coverage,reps,mean_width,excluded\n";
    for (const CoverageRow& r : rows) {
        out << r.k_star << ',' << r.L << ',' << format_double(r.coverage) << ',' << r.reps << ','
            << format_double(r.mean_width) << ',' << r.excluded << '\n';
    }
}

void write_power_csv(const std::vector<PowerRow>& rows, std::ostream& out) {
    out << "example_id,d,L,reject_rate,reps,excluded\n";
    for (const PowerRow& r : rows) {
        out << r.example_id << ',' << r.d << ',' << r.L << ',' << format_double(r.reject_rate)
            << ',' << r.reps << ',' << r.excluded << '\n';
    }
}

}  // namespace assortinf
