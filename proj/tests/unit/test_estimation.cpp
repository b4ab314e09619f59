#include <catch_amalgamated.hpp>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "assortinf/dataset.hpp"
#include "assortinf/errors.hpp"
#include "assortinf/estimation.hpp"

using namespace assortinf;
using Catch::Approx;

namespace {

// Reference values from tests/oracles/gen_oracles.py.
ObservedDataset toy() {
    return ObservedDataset(3, 4, 0.5, {},
                           {Assortment{1, 2}, Assortment{2, 3}, Assortment{1, 3}, Assortment{1, 2, 3}},
                           {{0, 1, 1, 2}, {3, 3, 0, 2}, {1, 0, 3, 3}, {2, 1, 3, 0}});
}

Eigen::VectorXd toy_theta() {
    Eigen::VectorXd t(4);
    t << 0.0, 0.3, -0.5, 1.1;
    return t;
}

ObservedDataset random_dataset(int n, int L, Rng& rng, Eigen::VectorXd* theta_out = nullptr) {
    ScenarioSpec spec;
    spec.n = n;
    spec.p = 0.5;
    const auto theta = generate_scores(spec, rng);
    if (theta_out) *theta_out = theta.values();
    return simulate_choices(theta, sample_offer_sets(n, 0.5, rng), L, rng, 0.5);
}

}  // namespace

TEST_CASE("likelihood against reference values") {
    const ObservedDataset d = toy();
    const LikelihoodWorkspace w(d, 0.2);
    const Eigen::VectorXd t = toy_theta();
    CHECK(neg_log_likelihood(w, t) == Approx(4.910109982256529).epsilon(1e-13));
    CHECK(neg_log_likelihood(w, t, Penalty::Excluded) == Approx(4.7753599822565285).epsilon(1e-13));

    const Eigen::VectorXd gp = gradient(w, t, Penalty::Included);
    const Eigen::VectorXd g = gradient(w, t, Penalty::Excluded);
    const double ref_gp[] = {-0.1353176360781043, -0.04982402591500661, -0.45653474758920276,
                             0.6416764095823135};
    const double ref_g[] = {-0.09031763607810428, -0.0648240259150066, -0.31153474758920274,
                            0.4666764095823135};
    for (int i = 0; i < 4; ++i) {
        CHECK(gp[i] == Approx(ref_gp[i]).epsilon(1e-12));
        CHECK(g[i] == Approx(ref_g[i]).epsilon(1e-12));
    }

    Eigen::MatrixXd ref_h(4, 4);
    ref_h << 0.6851973787633868, -0.23952573733005633, -0.1149981792066558, -0.33067346222667465,
        -0.23952573733005633, 0.6118500479088806, -0.11671824758473633, -0.25560606299408795,
        -0.1149981792066558, -0.11671824758473633, 0.3687153309108327, -0.13699890411944057,
        -0.33067346222667465, -0.25560606299408795, -0.13699890411944057, 0.7232784293402033;
    CHECK((hessian(w, t) - ref_h).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::MatrixXd ref_pinv(4, 4);
    ref_pinv << 0.8691727182663872, -0.22052284433215125, -0.5233194232637673, -0.12533045067046875,
        -0.22052284433215139, 0.9524143468600436, -0.5229513181420049, -0.20894018438588718,
        -0.5233194232637673, -0.5229513181420044, 1.5267895369687023, -0.48051879556293065,
        -0.12533045067046875, -0.208940184385887, -0.4805187955629307, 0.8147894306192864;
    const HessianPseudoinverse hd = hessian_pseudoinverse(hessian(w, t));
    CHECK((hd.matrix - ref_pinv).cwiseAbs().maxCoeff() < 1e-12);

    const PreferenceVector deb = debias(w, PreferenceVector::anchored(t));
    const double ref_d[] = {-0.26533697302321546, 0.05141217846924184, -0.10627000375095808,
                            0.32019479830493136};
    for (int i = 0; i < 4; ++i) CHECK(deb[i] == Approx(ref_d[i]).epsilon(1e-12));
    CHECK(deb.values().sum() == Approx(0.0).margin(1e-14));
}

TEST_CASE("likelihood matches the per-observation product of probabilities") {
    Rng rng(21);
    Eigen::VectorXd theta;
    const ObservedDataset d = random_dataset(6, 9, rng, &theta);
    const LikelihoodWorkspace w(d, 0.0);
    const PreferenceVector th(theta, Gauge::Free);
    double direct = 0;
    for (std::size_t s = 0; s < d.num_sets(); ++s) {
        for (int c : d.choices()[s]) direct -= std::log(choice_probability(th, d.sets()[s], c)) / d.L();
    }
    CHECK(neg_log_likelihood(w, theta) == Approx(direct).epsilon(1e-12));
}

TEST_CASE("single set, single customer") {
    const ObservedDataset d(1, 1, 1.0, {}, {Assortment{1}}, {{0}});
    const LikelihoodWorkspace w(d, 0.0);
    CHECK(neg_log_likelihood(w, Eigen::VectorXd::Zero(2)) == Approx(std::log(2.0)));
}

TEST_CASE("penalty vanishes on constant vectors") {
    const ObservedDataset d = toy();
    const LikelihoodWorkspace w(d, 3.0);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 0.7);
    CHECK(neg_log_likelihood(w, c) == Approx(neg_log_likelihood(w, c, Penalty::Excluded)));
}

TEST_CASE("gradient and Hessian structure") {
    Rng rng(22);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd theta;
        const ObservedDataset d = random_dataset(7, 15, rng, &theta);
        const LikelihoodWorkspace w(d, 0.1);
        CHECK(std::abs(gradient(w, theta, Penalty::Excluded).sum()) < 1e-10);
        CHECK(std::abs(gradient(w, theta, Penalty::Included).sum()) < 1e-10);
        const Eigen::MatrixXd h = hessian(w, theta);
        CHECK((h * Eigen::VectorXd::Ones(8)).cwiseAbs().maxCoeff() < 1e-10);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
        const Eigen::MatrixXd hp = hessian(w, theta, Penalty::Included);
        CHECK((hp * Eigen::VectorXd::Ones(8)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("gradient is zero when the model reproduces the frequencies") {
    // Two items, theta = 0: every S_+ option has frequency 1/|S_+|.
    const ObservedDataset d(2, 6, 1.0, {}, {Assortment{1}, Assortment{1, 2}},
                            {{0, 1, 0, 1, 0, 1}, {0, 1, 2, 0, 1, 2}});
    const LikelihoodWorkspace w(d, 0.0);
    CHECK(gradient(w, Eigen::VectorXd::Zero(3), Penalty::Excluded).norm() < 1e-15);

    const LikelihoodWorkspace tiny(d, 1e-9);
    const FitResult fit = fit_mle(tiny, {});
    CHECK(fit.theta.values().cwiseAbs().maxCoeff() < 1e-4);
    // Perfect fit: the debiasing step is a pure recentering.
    const PreferenceVector deb = debias(w, fit.theta);
    CHECK((deb.values() - fit.theta.to_centered().values()).norm() < 1e-8);
}

TEST_CASE("fit_mle reaches a stationary point of the penalized objective") {
    Rng rng(23);
    Eigen::VectorXd truth;
    const ObservedDataset d = random_dataset(8, 200, rng, &truth);
    const double lambda = default_lambda(8, 0.5, 200, 0.25);
    const LikelihoodWorkspace w(d, lambda);
    std::vector<IterationRecord> trace;
    FitConfig config;
    config.trace = [&](const IterationRecord& r) { trace.push_back(r); };
    const FitResult fit = fit_mle(w, config);
    CHECK(fit.gradient_norm <= config.tol);
    CHECK(fit.theta[0] == 0.0);
    CHECK(fit.theta.gauge() == Gauge::Anchored);
    CHECK(fit.objective == Approx(neg_log_likelihood(w, fit.theta)).epsilon(1e-12));
    CHECK(neg_log_likelihood(w, fit.theta) <= neg_log_likelihood(w, truth) + 1e-12);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i].objective <= trace[i - 1].objective);
    // Full gradient (including the theta_0 coordinate) vanishes: the objective is shift invariant.
    CHECK(gradient(w, fit.theta, Penalty::Included).norm() < 1e-7);
}

TEST_CASE("fit_mle errors") {
    const ObservedDataset empty(3, 5, 0.1, {}, {}, {});
    const LikelihoodWorkspace w(empty, 0.1);
    CHECK(w.warnings().size() == 2);
    CHECK_THROWS_AS(fit_mle(w, {}), DomainError);

    const ObservedDataset d = toy();
    CHECK_THROWS_AS(fit_mle(LikelihoodWorkspace(d, 0.0), {}), DomainError);
    CHECK_THROWS_AS(LikelihoodWorkspace(d, -1.0), DomainError);

    FitConfig two;
    two.max_iters = 2;
    two.tol = 1e-15;
    try {
        fit_mle(LikelihoodWorkspace(d, 0.2), two);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.last_iterate().size() == 4);
        CHECK(e.gradient_norm() > 0.0);
    }
}

TEST_CASE("pseudoinverse of a projector is itself") {
    const int dim = 6;
    const Eigen::MatrixXd p =
        Eigen::MatrixXd::Identity(dim, dim) - Eigen::MatrixXd::Constant(dim, dim, 1.0 / dim);
    CHECK((hessian_pseudoinverse(p).matrix - p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((hessian_pseudoinverse(2.5 * p).matrix - p / 2.5).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("disconnected products make the Hessian singular") {
    // Product 3 never appears: its row and column of H are zero.
    const ObservedDataset d(3, 2, 0.5, {}, {Assortment{1, 2}}, {{0, 1}});
    const LikelihoodWorkspace w(d, 0.1);
    REQUIRE(w.warnings().size() == 1);
    CHECK_THROWS_AS(hessian_pseudoinverse(hessian(w, Eigen::VectorXd::Zero(4))), SingularityError);
}

TEST_CASE("default lambda") {
    CHECK(default_lambda(15, 0.01, 1000, 1.0) ==
          Approx(std::sqrt(32768 * 0.01 * std::log(15.0) / (15 * 1000.0))));
}
