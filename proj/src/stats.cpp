#include "assortinf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "assortinf/errors.hpp"

namespace assortinf {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double kolmogorov_survival(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 1.18) {
        // Theta-function form converges fast for small t.
        const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * t * t));
        const double sum = y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49);
        return 1.0 - std::sqrt(2.0 * std::numbers::pi) / t * sum;
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * t * t);
        sum += sign * term;
        if (term < 1e-17) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_standard_normal(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("KS test needs at least one sample");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double m = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = normal_cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
    }
    const double root = std::sqrt(m);
    return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d), static_cast<int>(x.size())};
}

}  // namespace assortinf
