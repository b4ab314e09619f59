#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>

#include "assortinf/dataset.hpp"
#include "assortinf/errors.hpp"

using namespace assortinf;
using Catch::Approx;

TEST_CASE("score generation") {
    ScenarioSpec spec;
    spec.p = 0.1;
    spec.sigma_theta_sq = 0.0;
    Rng rng(1);
    const auto zero = generate_scores(spec, rng);
    CHECK(zero.values().isZero());

    spec.n = 60;
    spec.sigma_theta_sq = 3.0;
    Rng big(2);
    double s = 0, s2 = 0;
    int m = 0;
    for (int rep = 0; rep < 1700; ++rep) {
        const auto th = generate_scores(spec, big);
        for (int i = 1; i <= spec.n; ++i) {
            s += th[i];
            s2 += th[i] * th[i];
            ++m;
        }
    }
    const double var = s2 / m - (s / m) * (s / m);
    CHECK(std::abs(var - 3.0) < 0.05 * 3.0);

    Rng a(9), b(9);
    CHECK(generate_scores(spec, a).values() == generate_scores(spec, b).values());
}

TEST_CASE("revenue solver") {
    Rng rng(4);
    ScenarioSpec spec;
    spec.n = 6;
    spec.p = 0.5;
    const auto theta = generate_scores(spec, rng);

    SECTION("flat targets give constant revenues") {
        const Eigen::VectorXd t = Eigen::VectorXd::Constant(6, -0.2);
        const RevenueVector r = revenues_from_delta_targets(theta, t);
        const double expect = std::exp(theta.mean()) * 0.2 / std::exp(theta[0]);
        for (int i = 1; i <= 6; ++i) CHECK(r[i] == Approx(expect).epsilon(1e-14));
    }
    SECTION("round trip") {
        Eigen::VectorXd t(6);
        t << -0.5, -0.3, -0.3, -0.1, 0.0, 0.02;
        const RevenueVector r = revenues_from_delta_targets(theta, t);
        const DeltaSequence d = delta_sequence(theta, r, true);
        for (int k = 0; k < 6; ++k) CHECK(d.values[k] == Approx(t[k]).margin(1e-12));
    }
    SECTION("infeasible targets") {
        Eigen::VectorXd t(6);
        t << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
        CHECK_THROWS_AS(revenues_from_delta_targets(theta, t), InfeasibleError);
        t << -0.1, -0.2, 0.3, 0.4, 0.5, 0.6;
        CHECK_THROWS_AS(revenues_from_delta_targets(theta, t), InfeasibleError);
        t << -1e-6, 50, 50, 50, 50, 50;
        CHECK_THROWS_AS(revenues_from_delta_targets(theta, t), InfeasibleError);
    }
}

TEST_CASE("scenario profile reproduces K*") {
    for (int k = 1; k <= 14; ++k) {
        ScenarioSpec spec;
        spec.k_star_target = k;
        spec.p = default_selection_probability(spec.n);
        Rng rng(100 + static_cast<std::uint64_t>(k));
        const Scenario sc = make_scenario(spec, rng);
        CHECK(optimal_assortment(sc.theta, sc.revenues).k_star == k);
        CHECK(sc.delta(k) == Approx(-0.001).epsilon(1e-9));
        CHECK(sc.delta(k + 1) == Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("selection probability") {
    CHECK(default_selection_probability(15) == Approx(15 * std::log(15.0) / 32768.0));
    CHECK(default_selection_probability(3) == Approx(3 * std::log(3.0) / 8));
    CHECK(default_selection_probability(1) == 0.0);
}

TEST_CASE("offer-set sampling") {
    Rng rng(5);
    CHECK(sample_offer_sets(8, 0.0, rng).empty());
    const auto all = sample_offer_sets(3, 1.0, rng);
    CHECK(std::set<Assortment>(all.begin(), all.end()).size() == 7);

    const auto sets = sample_offer_sets(12, 0.3, rng);
    std::set<std::uint64_t> masks;
    for (const auto& s : sets) {
        CHECK_FALSE(s.empty());
        masks.insert(s.mask());
    }
    CHECK(masks.size() == sets.size());

    // Mean count for n = 20 within 3 standard errors of p (2^n - 1).
    const int n = 20;
    const double p = default_selection_probability(n);
    const double trials = std::ldexp(1.0, n) - 1;
    double total = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Rng r(seed);
        total += static_cast<double>(sample_offer_sets(n, p, r).size());
    }
    const double se = std::sqrt(trials * p * (1 - p) / 500);
    CHECK(std::abs(total / 500 - trials * p) < 3 * se);
}

TEST_CASE("binomial sampler") {
    Rng rng(6);
    for (auto [trials, p] : {std::pair<std::uint64_t, double>{50, 0.1}, {5000, 0.3}, {100, 0.9},
                             {std::uint64_t{1} << 30, 1e-6}}) {
        double s = 0;
        const int m = 2000;
        for (int i = 0; i < m; ++i) s += static_cast<double>(sample_binomial(trials, p, rng));
        const double nt = static_cast<double>(trials);
        CHECK(std::abs(s / m - nt * p) < 4 * std::sqrt(nt * p * (1 - p) / m));
    }
    CHECK(sample_binomial(10, 0.0, rng) == 0);
    CHECK(sample_binomial(10, 1.0, rng) == 10);
}

TEST_CASE("choice simulation") {
    const auto theta = PreferenceVector::anchored(Eigen::VectorXd::Zero(3));
    Rng rng(7);
    const ObservedDataset d = simulate_choices(theta, {Assortment{2}}, 100000, rng);
    const double f = d.frequencies(0)[1];
    CHECK(std::abs(f - 0.5) < 3 * std::sqrt(0.25 / 100000));
    for (int c : d.choices()[0]) CHECK((c == 0 || c == 2));

    Rng a(8), b(8);
    CHECK(simulate_choices(theta, {Assortment{1, 2}}, 50, a) ==
          simulate_choices(theta, {Assortment{1, 2}}, 50, b));
}

TEST_CASE("dataset invariants") {
    CHECK_THROWS_AS(ObservedDataset(2, 2, 0.5, {}, {Assortment{1}}, {{0, 2}}), ValidationError);
    CHECK_THROWS_AS(ObservedDataset(2, 2, 0.5, {}, {Assortment{1}}, {{0}}), ValidationError);
    CHECK_THROWS_AS(ObservedDataset(2, 1, 0.5, {}, {Assortment{1}, Assortment{1}}, {{0}, {1}}),
                    ValidationError);
    CHECK_THROWS_AS(ObservedDataset(2, 1, 0.5, {}, {Assortment{3}}, {{0}}), ValidationError);
    CHECK_THROWS_AS(ObservedDataset(2, 1, 0.5, {}, {Assortment{}}, {{0}}), ValidationError);
    const ObservedDataset empty(3, 5, 0.1, {}, {}, {});
    CHECK(empty.empty());
    CHECK(empty.uncovered_items() == std::vector<int>{1, 2, 3});
}

TEST_CASE("JSON round trip and errors") {
    const auto theta = PreferenceVector::anchored(Eigen::VectorXd::Zero(5));
    Rng rng(9);
    const ObservedDataset d =
        simulate_choices(theta, sample_offer_sets(4, 0.6, rng), 7, rng, 0.6, 9);
    CHECK(dataset_from_json(dataset_to_json(d)) == d);

    const auto path = std::filesystem::temp_directory_path() / "assortinf_roundtrip.json";
    save_dataset(d, path);
    CHECK(load_dataset(path) == d);
    std::filesystem::remove(path);

    const ObservedDataset empty(3, 5, 0.1, std::nullopt, {}, {});
    CHECK(dataset_from_json(dataset_to_json(empty)) == empty);

    CHECK_THROWS_AS(dataset_from_json("{"), ParseError);
    CHECK_THROWS_AS(dataset_from_json(R"({"version":1,"n":2,"L":1,"p":0.5,"seed":null})"),
                    ParseError);
    CHECK_THROWS_AS(dataset_from_json(
                        R"({"version":2,"n":2,"L":1,"p":0.5,"seed":null,"sets":[],"choices":[]})"),
                    ParseError);
    try {
        dataset_from_json(
            R"({"version":1,"n":2,"L":1,"p":0.5,"seed":null,"sets":[[1,"x"]],"choices":[[0]]})");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("sets[0][1]") != std::string::npos);
    }
    CHECK_THROWS_AS(dataset_from_json(
                        R"({"version":1,"n":2,"L":1,"p":0.5,"seed":null,"sets":[[1]],"choices":[[2]]})"),
                    ValidationError);
}
