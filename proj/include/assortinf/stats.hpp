#pragma once

#include <span>

namespace assortinf {

double normal_cdf(double x);
/// Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

/// Kolmogorov survival function Q(t) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 t^2).
double kolmogorov_survival(double t);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int count = 0;
};

/// One-sample Kolmogorov-Smirnov test against N(0, 1). The p-value uses the
/// asymptotic distribution with Stephens' small-sample correction
/// (sqrt(m) + 0.12 + 0.11 / sqrt(m)) D.
KsResult ks_test_standard_normal(std::span<const double> samples);

}  // namespace assortinf
