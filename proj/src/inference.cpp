#include "assortinf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "assortinf/errors.hpp"
#include "assortinf/stats.hpp"

namespace assortinf {

GapEstimates gap_estimates(const PreferenceVector& theta_d, const PreferenceVector& theta_mle,
                           const RevenueVector& r, const HessianPseudoinverse& hdag, int L) {
    const int n = r.n();
    if (theta_d.n() != n || theta_mle.n() != n || hdag.n() != n) {
        throw DomainError("gap estimates need scores, revenues and H^+ of matching size");
    }
    if (L < 1) throw DomainError("L must be positive");

    const Eigen::VectorXd u_hat = (theta_mle.values().array() - theta_mle.mean()).exp().matrix();
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n + 1);
    for (int k = 1; k <= n; ++k) {
        for (int i = 0; i < k; ++i) v(k - 1, i) = (r[i] - r[k]) * u_hat[i];
    }

    Eigen::VectorXd sd(n);
    const Eigen::MatrixXd hv = hdag.matrix * v.transpose();
    for (int k = 1; k <= n; ++k) {
        const double q = v.row(k - 1).dot(hv.col(k - 1));
        if (!(q > 0.0) || !std::isfinite(q)) {
            throw VarianceError("plug-in variance for k = " + std::to_string(k) +
                                    " is not positive (" + std::to_string(q) + ")",
                                k);
        }
        sd[k - 1] = std::sqrt(q / L);
    }
    return {deltas_from_scores(theta_d.scores(), r), std::move(v), std::move(sd), theta_d,
            theta_mle, L};
}

double t_statistic(const GapEstimates& g, const DeltaSequence& delta_true) {
    if (delta_true.n() != g.n()) throw DomainError("true gaps have the wrong length");
    double t = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < g.n(); ++k) {
        t = std::max(t, (g.delta_hat[k] - delta_true.values[k]) / g.sd[k]);
    }
    return t;
}

double upper_quantile(std::vector<double> samples, double alpha) {
    if (samples.empty()) throw DomainError("quantile of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    std::sort(samples.begin(), samples.end());
    const double b = static_cast<double>(samples.size());
    // Guard against (1 - alpha) * B landing a rounding error above an integer.
    auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, samples.size());
    return samples[rank - 1];
}

Eigen::MatrixXd bootstrap_coefficients(const ObservedDataset& d, const GapEstimates& g,
                                       const HessianPseudoinverse& hdag,
                                       const PreferenceVector& theta_mle) {
    const int n = g.n();
    if (d.n() != n) throw DomainError("dataset and gap estimates disagree on n");
    Eigen::MatrixXd a = (hdag.matrix * g.v_hat.transpose()).transpose();
    for (int k = 0; k < n; ++k) a.row(k) /= static_cast<double>(g.L) * g.sd[k];

    Eigen::Index cols = 0;
    for (const auto& s : d.sets()) cols += static_cast<Eigen::Index>(s.size()) + 1;
    Eigen::MatrixXd m(n, cols);
    Eigen::Index offset = 0;
    for (const auto& s : d.sets()) {
        const std::vector<int> items = s.with_no_purchase();
        const auto width = static_cast<Eigen::Index>(items.size());
        Eigen::VectorXd p(width);
        for (Eigen::Index j = 0; j < width; ++j) p[j] = std::exp(theta_mle[items[j]]);
        p /= p.sum();
        Eigen::MatrixXd block(n, width);
        for (Eigen::Index j = 0; j < width; ++j) block.col(j) = a.col(items[j]);
        const Eigen::VectorXd centre = block * p;
        m.middleCols(offset, width) = block.colwise() - centre;
        offset += width;
    }
    return m;
}

BootstrapQuantile bootstrap_quantile(const ObservedDataset& d, const GapEstimates& g,
                                     const HessianPseudoinverse& hdag,
                                     const PreferenceVector& theta_mle, double alpha, int B,
                                     const Rng& rng) {
    if (B < 2) throw DomainError("bootstrap needs B >= 2 replicates");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const Eigen::MatrixXd m = bootstrap_coefficients(d, g, hdag, theta_mle);

    // Column of the (set, chosen item) cell for every customer, in draw order.
    std::vector<Eigen::Index> cell;
    cell.reserve(d.num_sets() * static_cast<std::size_t>(d.L()));
    Eigen::Index offset = 0;
    for (std::size_t s = 0; s < d.num_sets(); ++s) {
        const auto& items = d.sets()[s].items();
        for (int c : d.choices()[s]) {
            const auto pos = c == 0 ? 0 : 1 + (std::lower_bound(items.begin(), items.end(), c) - items.begin());
            cell.push_back(offset + pos);
        }
        offset += static_cast<Eigen::Index>(items.size()) + 1;
    }

    std::vector<double> samples(static_cast<std::size_t>(B));
    Eigen::VectorXd z(m.cols());
    for (int b = 0; b < B; ++b) {
        Rng draw = rng.split(static_cast<std::uint64_t>(b));
        z.setZero();
        for (Eigen::Index c : cell) z[c] += draw.normal();
        samples[static_cast<std::size_t>(b)] = g.n() > 0 ? (m * z).maxCoeff() : 0.0;
    }
    const double c_w = upper_quantile(samples, alpha);
    return {std::move(samples), alpha, c_w, B, rng.key()};
}

ConfidenceInterval confidence_interval(const GapEstimates& g, double c_w, double alpha) {
    ConfidenceInterval ci;
    ci.alpha = alpha;
    ci.c_w_used = c_w;
    for (int k = g.n(); k >= 1; --k) {
        if (g.delta_hat[k - 1] < -c_w * g.sd[k - 1]) {
            ci.k_lower = k;
            break;
        }
    }
    for (int k = g.n(); k >= 1; --k) {
        if (g.delta_hat[k - 1] <= c_w * g.sd[k - 1]) {
            ci.k_upper = k;
            break;
        }
    }
    ci.degenerate = ci.k_lower == 0 || ci.k_upper == 0;
    return ci;
}

const char* to_string(Decision d) {
    return d == Decision::Reject ? "Reject" : "FailToReject";
}

TestOutcome test_property(const ConfidenceInterval& ci, const PropertySet& k0) {
    if (k0.empty()) return {Decision::Reject, true};
    for (int k : k0.values()) {
        if (ci.contains(k)) return {Decision::FailToReject, false};
    }
    return {Decision::Reject, false};
}

SingleProductTest single_product_test(const GapEstimates& g, int i, double alpha) {
    if (i < 1 || i > g.n()) throw DomainError("product index outside 1..n");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const double half = normal_quantile(1.0 - alpha / 2.0) * g.sd[i - 1];
    const double lower = g.delta_hat[i - 1] - half;
    const double upper = g.delta_hat[i - 1] + half;
    return {upper < 0.0 ? Decision::Reject : Decision::FailToReject, lower, upper};
}

InferenceResult run_inference(const ObservedDataset& d, const RevenueVector& r,
                              const InferenceConfig& config, const Rng& bootstrap_rng) {
    const LikelihoodWorkspace w(d, config.lambda);
    return run_inference_from_estimate(d, r, fit_mle(w, config.fit), config, bootstrap_rng);
}

InferenceResult run_inference_from_estimate(const ObservedDataset& d, const RevenueVector& r,
                                            const FitResult& fit, const InferenceConfig& config,
                                            const Rng& bootstrap_rng) {
    if (r.n() != d.n()) throw DomainError("revenues and dataset disagree on n");
    const LikelihoodWorkspace w(d, config.lambda);
    HessianPseudoinverse hdag = hessian_pseudoinverse(hessian(w, fit.theta));
    PreferenceVector theta_d = debias(w, fit.theta, hdag);
    GapEstimates gaps = gap_estimates(theta_d, fit.theta, r, hdag, d.L());
    BootstrapQuantile boot =
        bootstrap_quantile(d, gaps, hdag, fit.theta, config.alpha / 2.0, config.B, bootstrap_rng);
    const ConfidenceInterval ci = confidence_interval(gaps, boot.c_w, config.alpha);
    return {fit, std::move(hdag), std::move(gaps), std::move(boot), ci, w.warnings()};
}

}  // namespace assortinf
