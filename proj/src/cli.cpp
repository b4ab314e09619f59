#include "assortinf/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "assortinf/dataset.hpp"
#include "assortinf/errors.hpp"
#include "assortinf/estimation.hpp"
#include "assortinf/experiments.hpp"
#include "assortinf/inference.hpp"

namespace assortinf {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailed = 2;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw Error("failed writing " + path);
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + " is not valid JSON: " + e.what());
    }
}

// Accepts a bare array or an object with a "revenues" array (the --truth file).
RevenueVector load_revenues(const std::string& path) {
    const json doc = parse_json_file(path);
    const json& arr = doc.is_object() && doc.contains("revenues") ? doc.at("revenues") : doc;
    if (!arr.is_array()) throw ParseError(path + ": expected an array of revenues");
    Eigen::VectorXd r(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t j = 0; j < arr.size(); ++j) {
        if (!arr[j].is_number()) {
            throw ParseError(path + ": 'revenues[" + std::to_string(j) + "]' must be a number");
        }
        r[static_cast<Eigen::Index>(j)] = arr[j].get<double>();
    }
    try {
        return RevenueVector(std::move(r));
    } catch (const DomainError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

FitResult load_estimate(const std::string& path) {
    const json doc = parse_json_file(path);
    if (!doc.is_object() || !doc.contains("theta_hat") || !doc.at("theta_hat").is_array()) {
        throw ParseError(path + ": missing array 'theta_hat'");
    }
    const json& th = doc.at("theta_hat");
    Eigen::VectorXd theta(static_cast<Eigen::Index>(th.size()));
    for (std::size_t j = 0; j < th.size(); ++j) {
        if (!th[j].is_number()) {
            throw ParseError(path + ": 'theta_hat[" + std::to_string(j) + "]' must be a number");
        }
        theta[static_cast<Eigen::Index>(j)] = th[j].get<double>();
    }
    return {PreferenceVector(std::move(theta), Gauge::Free), doc.value("iterations", 0),
            doc.value("gradient_norm", 0.0), doc.value("objective", 0.0)};
}

struct SimulateArgs {
    ScenarioSpec spec;
    std::optional<double> p;
    std::uint64_t seed = 0;
    std::string out;
    std::string truth;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    ScenarioSpec spec = a.spec;
    spec.p = a.p ? *a.p : default_selection_probability(spec.n);
    spec.seed = a.seed;
    spec.validate();
    Rng root(a.seed);
    ReplicationStreams streams{root.split(1), root.split(2), root.split(3), root.split(4)};
    Scenario truth = make_scenario(spec, streams.scenario);
    std::vector<Assortment> sets = sample_offer_sets(spec.n, spec.p, streams.sets);
    const ObservedDataset d =
        simulate_choices(truth.theta, std::move(sets), spec.L, streams.choices, spec.p, a.seed);
    save_dataset(d, a.out);
    if (!a.truth.empty()) {
        json t;
        t["theta"] = to_std(truth.theta.values());
        t["revenues"] = to_std(truth.revenues.values());
        t["delta"] = to_std(truth.delta.values);
        t["K_star"] = truth.k_star;
        write_text(a.truth, t.dump(2) + "\n");
    }
    out << "wrote " << d.num_sets() << " offer sets x " << d.L() << " customers to " << a.out
        << "\n";
    return kExitOk;
}

struct EstimateArgs {
    std::string dataset;
    std::string revenues;
    double lambda_c = 1.0;
    std::optional<double> lambda;
    std::string out;
};

double resolve_lambda(const ObservedDataset& d, double c, const std::optional<double>& lambda) {
    if (lambda) return *lambda;
    const double p = d.sampling_p() > 0.0 ? d.sampling_p() : default_selection_probability(d.n());
    return default_lambda(d.n(), p, d.L(), c);
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
    const ObservedDataset d = load_dataset(a.dataset);
    const RevenueVector r = load_revenues(a.revenues);
    if (r.n() != d.n()) throw ValidationError("revenues and dataset disagree on n");
    const double lambda = resolve_lambda(d, a.lambda_c, a.lambda);
    const LikelihoodWorkspace w(d, lambda);
    for (const auto& msg : w.warnings()) err << "warning: " << msg << "\n";
    const FitResult fit = fit_mle(w, {});
    const HessianPseudoinverse hdag = hessian_pseudoinverse(hessian(w, fit.theta));
    const PreferenceVector theta_d = debias(w, fit.theta, hdag);
    const GapEstimates g = gap_estimates(theta_d, fit.theta, r, hdag, d.L());

    json rep;
    rep["n"] = d.n();
    rep["L"] = d.L();
    rep["lambda"] = lambda;
    rep["theta_hat"] = to_std(fit.theta.values());
    rep["theta_debiased"] = to_std(theta_d.values());
    rep["delta_hat"] = to_std(g.delta_hat);
    rep["sd"] = to_std(g.sd);
    rep["k_hat"] = last_negative(g.delta_hat);
    rep["iterations"] = fit.iterations;
    rep["gradient_norm"] = fit.gradient_norm;
    rep["objective"] = fit.objective;
    rep["warnings"] = w.warnings();
    const std::string text = rep.dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
    } else {
        write_text(a.out, text);
        out << "K_hat = " << last_negative(g.delta_hat) << "; report written to " << a.out << "\n";
    }
    return kExitOk;
}

struct TestArgs {
    std::string dataset;
    std::string revenues;
    std::string estimate;
    HypothesisSpec hypothesis;
    std::string a_list;
    std::string partition;
    std::string k0_list;
    double alpha = 0.05;
    int B = 200;
    std::uint64_t seed = 0;
    double lambda_c = 1.0;
    std::optional<double> lambda;
    std::string out;
};

int cmd_test(TestArgs a, std::ostream& out, std::ostream& err) {
    const ObservedDataset d = load_dataset(a.dataset);
    const RevenueVector r = load_revenues(a.revenues);
    if (r.n() != d.n()) throw ValidationError("revenues and dataset disagree on n");
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (a.B < 2) throw ValidationError("B must be at least 2");
    a.hypothesis.A = parse_index_list(a.a_list);
    a.hypothesis.partition = parse_partition(a.partition);
    a.hypothesis.k0 = parse_index_list(a.k0_list);
    const PropertySet k0 = build_property_set(a.hypothesis, d.n());

    InferenceConfig config;
    config.lambda = resolve_lambda(d, a.lambda_c, a.lambda);
    config.alpha = a.alpha;
    config.B = a.B;
    const Rng boot = Rng(a.seed).split(4);
    const InferenceResult res =
        a.estimate.empty()
            ? run_inference(d, r, config, boot)
            : run_inference_from_estimate(d, r, load_estimate(a.estimate), config, boot);
    for (const auto& msg : res.warnings) err << "warning: " << msg << "\n";
    const TestOutcome outcome = test_property(res.ci, k0);

    out << "K0: {";
    for (std::size_t j = 0; j < k0.values().size(); ++j) out << (j ? "," : "") << k0.values()[j];
    out << "}  (" << k0.description() << ")\n";
    out << "CI: [" << res.ci.k_lower << ", " << res.ci.k_upper << "]  alpha = " << a.alpha
        << "  c_w = " << format_double(res.ci.c_w_used) << (res.ci.degenerate ? "  (degenerate)" : "")
        << "\n";
    out << "K_hat: " << res.k_hat() << "\n";
    if (outcome.empty_null) out << "note: K0 is empty, the null cannot hold\n";
    json rep;
    if (a.hypothesis.example == "example1") {
        const SingleProductTest z = single_product_test(res.gaps, a.hypothesis.i, a.alpha);
        out << "z-test for product " << a.hypothesis.i << ": " << to_string(z.decision) << "  ["
            << format_double(z.lower) << ", " << format_double(z.upper) << "]\n";
        rep["z_test"] = {{"decision", to_string(z.decision)}, {"lower", z.lower}, {"upper", z.upper}};
    }
    out << "decision: " << to_string(outcome.decision) << "\n";

    if (!a.out.empty()) {
        rep["hypothesis"] = a.hypothesis.example;
        rep["k0"] = k0.values();
        rep["ci"] = {{"k_lower", res.ci.k_lower}, {"k_upper", res.ci.k_upper},
                     {"alpha", res.ci.alpha}, {"c_w", res.ci.c_w_used},
                     {"degenerate", res.ci.degenerate}};
        rep["decision"] = to_string(outcome.decision);
        rep["empty_null"] = outcome.empty_null;
        rep["k_hat"] = res.k_hat();
        rep["delta_hat"] = to_std(res.gaps.delta_hat);
        rep["sd"] = to_std(res.gaps.sd);
        rep["theta_hat"] = to_std(res.fit.theta.values());
        rep["lambda"] = config.lambda;
        rep["B"] = a.B;
        rep["seed"] = a.seed;
        write_text(a.out, rep.dump(2) + "\n");
    }
    return kExitOk;
}

struct ExperimentArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

int cmd_experiment(const std::string& kind, const ExperimentArgs& a, std::ostream& out) {
    ExperimentConfig config = load_experiment_config(a.config);
    if (a.seed) config.master_seed = *a.seed;
    if (a.jobs) config.jobs = *a.jobs;
    std::string path = a.out.empty() ? config.output_path : a.out;
    if (path.empty()) path = kind + ".csv";

    std::ostringstream csv;
    if (kind == "qq") {
        const QqResult res = run_qq(config);
        write_qq_csv(res, csv);
        out << "KS std_theta_d_1: D = " << format_double(res.ks_theta_d_1.statistic)
            << ", p = " << format_double(res.ks_theta_d_1.p_value) << "\n";
        out << "KS std_delta_1:   D = " << format_double(res.ks_delta_1.statistic)
            << ", p = " << format_double(res.ks_delta_1.p_value) << "\n";
        out << "excluded: " << res.excluded << " of " << config.reps << "\n";
    } else if (kind == "coverage") {
        const auto rows = run_coverage(config);
        write_coverage_csv(rows, csv);
        out << rows.size() << " coverage cells\n";
    } else {
        const auto rows = run_power(config);
        write_power_csv(rows, csv);
        out << rows.size() << " power cells\n";
    }
    write_text(path, csv.str());
    out << "wrote " << path << "\n";
    return kExitOk;
}

int dispatch(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "simulate a dataset from a random scenario");
    simulate->add_option("--n", sim.spec.n, "number of products")->capture_default_str();
    simulate->add_option("--sigma-theta-sq", sim.spec.sigma_theta_sq, "score variance")->capture_default_str();
    simulate->add_option("--k-star", sim.spec.k_star_target, "target K*")->capture_default_str();
    simulate->add_option("--delta", sim.spec.delta_magnitude, "gap magnitude")->capture_default_str();
    simulate->add_option("--p", sim.p, "set selection probability (default n log n / 2^n)");
    simulate->add_option("--L", sim.spec.L, "customers per offer set")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "dataset JSON")->required();
    simulate->add_option("--truth", sim.truth, "write true theta, revenues and K* here");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "fit, debias and estimate the gaps");
    estimate->add_option("--dataset", est.dataset, "dataset JSON")->required();
    estimate->add_option("--revenues", est.revenues, "revenue JSON (array or {\"revenues\": [...]})")->required();
    estimate->add_option("--lambda-c", est.lambda_c, "penalty constant c")->capture_default_str();
    estimate->add_option("--lambda", est.lambda, "explicit penalty weight");
    estimate->add_option("--out", est.out, "report JSON (default: stdout)");

    TestArgs tst;
    auto* test = app.add_subcommand("test", "test a property of the optimal assortment");
    test->add_option("--dataset", tst.dataset, "dataset JSON")->required();
    test->add_option("--revenues", tst.revenues, "revenue JSON")->required();
    test->add_option("--estimate", tst.estimate, "reuse theta_hat from an estimate report");
    test->add_option("--hypothesis", tst.hypothesis.example, "example1..example6 or k0")->required();
    test->add_option("--i", tst.hypothesis.i, "product (example1)");
    test->add_option("--A", tst.a_list, "product list, e.g. 2,4,6-8 (examples 2-4)");
    test->add_option("--q", tst.hypothesis.q, "percent threshold (example4)")->capture_default_str();
    test->add_option("--partition", tst.partition, "blocks separated by ';' (examples 5-6)");
    test->add_option("--n0", tst.hypothesis.n0, "block count (example6)")->capture_default_str();
    test->add_option("--k0", tst.k0_list, "explicit K0 list");
    test->add_option("--alpha", tst.alpha, "level")->capture_default_str();
    test->add_option("--B", tst.B, "bootstrap replicates")->capture_default_str();
    test->add_option("--seed", tst.seed, "bootstrap seed")->capture_default_str();
    test->add_option("--lambda-c", tst.lambda_c, "penalty constant c")->capture_default_str();
    test->add_option("--lambda", tst.lambda, "explicit penalty weight");
    test->add_option("--out", tst.out, "report JSON");

    ExperimentArgs ex;
    auto* experiment = app.add_subcommand("experiment", "Monte Carlo experiments");
    experiment->require_subcommand(1);
    std::string kind;
    for (const char* name : {"qq", "coverage", "power"}) {
        auto* sub = experiment->add_subcommand(name, std::string(name) + " experiment");
        sub->add_option("--config", ex.config, "config JSON")->required();
        sub->add_option("--out", ex.out, "CSV path (default: config output_path)");
        sub->add_option("--seed", ex.seed, "master seed override");
        sub->add_option("--jobs", ex.jobs, "worker threads");
        sub->callback([&kind, name] { kind = name; });
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const CLI::App* where = &app;
        for (auto* sub : app.get_subcommands()) {
            where = sub;
            for (auto* inner : sub->get_subcommands()) where = inner;
        }
        err << where->help();
        return kExitInvalid;
    }

    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (estimate->parsed()) return cmd_estimate(est, out, err);
    if (test->parsed()) return cmd_test(tst, out, err);
    return cmd_experiment(kind, ex, out);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Inference on the optimal assortment under the MNL model", "assortinf");
    try {
        return dispatch(app, args, out, err);
    } catch (const ConvergenceError& e) {
        err << "convergence failure: " << e.what() << "\n";
        return kExitFailed;
    } catch (const SingularityError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitFailed;
    } catch (const VarianceError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitFailed;
    } catch (const ExperimentError& e) {
        err << "experiment failed: " << e.what() << "\n";
        return kExitFailed;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace assortinf
