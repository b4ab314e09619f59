#include <catch_amalgamated.hpp>

#include <vector>

#include "assortinf/stats.hpp"

using namespace assortinf;
using Catch::Approx;

// Reference values: scipy.special.kolmogorov, scipy.stats (tests/oracles/gen_oracles.py).

TEST_CASE("normal distribution") {
    CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-14));
    CHECK(normal_cdf(1.5) == Approx(0.9331927987311419).epsilon(1e-14));
    CHECK(normal_cdf(normal_quantile(0.3)) == Approx(0.3).epsilon(1e-14));
}

TEST_CASE("Kolmogorov survival function") {
    const std::pair<double, double> ref[] = {{0.3, 0.9999906941986655}, {0.8, 0.5441424115741981},
                                             {1.0, 0.26999967167735456}, {1.18, 0.1234538094297657},
                                             {1.5, 0.022217962616525127}, {2.0, 0.0006709252557796953}};
    for (auto [t, q] : ref) CHECK(kolmogorov_survival(t) == Approx(q).epsilon(1e-10));
    CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("one-sample KS test") {
    const std::vector<double> x{-1.2, 0.3, 0.8, -0.05, 2.1, -0.7, 0.45, 1.3, -1.9, 0.05};
    const KsResult r = ks_test_standard_normal(x);
    CHECK(r.statistic == Approx(0.18006119416162752).epsilon(1e-12));
    CHECK(r.p_value == Approx(0.8678712490033218).epsilon(1e-10));
    CHECK(r.count == 10);

    std::vector<double> shifted(200);
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        shifted[i] = 3.0 + normal_quantile((static_cast<double>(i) + 0.5) / 200.0);
    }
    CHECK(ks_test_standard_normal(shifted).p_value < 1e-10);
}
