#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "assortinf/dataset.hpp"
#include "assortinf/estimation.hpp"
#include "assortinf/hypotheses.hpp"
#include "assortinf/model.hpp"
#include "assortinf/rng.hpp"

namespace assortinf {

/// Plug-in gaps and their standard errors.
///
/// Three score vectors meet here and are kept apart: Delta-hat uses the
/// debiased theta_d, the weights v-hat use u-hat = exp of the centered MLE,
/// and the variance uses H^+ evaluated at the MLE.
struct GapEstimates {
    Eigen::VectorXd delta_hat;  ///< delta_hat[k - 1] = Delta-hat_k
    Eigen::MatrixXd v_hat;      ///< row k - 1 is v-hat_k (length n + 1)
    Eigen::VectorXd sd;         ///< sqrt(v-hat_k^T H^+ v-hat_k / L)
    PreferenceVector theta_d;
    PreferenceVector theta_mle;
    int L;

    int n() const { return static_cast<int>(delta_hat.size()); }
};

/// Throws VarianceError naming k when a quadratic form is not positive.
GapEstimates gap_estimates(const PreferenceVector& theta_d, const PreferenceVector& theta_mle,
                           const RevenueVector& r, const HessianPseudoinverse& hdag, int L);

/// T = max_k (Delta-hat_k - Delta_k) / sd_k against scaled true gaps.
double t_statistic(const GapEstimates& g, const DeltaSequence& delta_true);

/// ceil((1 - alpha) B)-th smallest sample.
double upper_quantile(std::vector<double> samples, double alpha);

struct BootstrapQuantile {
    std::vector<double> samples;  ///< W_1..W_B in replicate order
    double alpha;
    double c_w;
    int B;
    std::uint64_t seed;  ///< key of the generator the replicates were split from

    /// Quantile of the same draws at another level.
    double at(double alpha) const { return upper_quantile(samples, alpha); }
};

/// Per-(k, S, i) multiplier coefficients a_k . (e_i - p-hat(S)) with
/// a_k = H^+ v-hat_k / sqrt(L v-hat_k^T H^+ v-hat_k) and p-hat from the MLE.
/// Columns follow the sets in dataset order, each over S_+ in
/// Assortment::with_no_purchase() order.
Eigen::MatrixXd bootstrap_coefficients(const ObservedDataset& d, const GapEstimates& g,
                                       const HessianPseudoinverse& hdag,
                                       const PreferenceVector& theta_mle);

/// Gaussian multiplier bootstrap for the quantile of T.
///
/// Replicate b runs on rng.split(b) and draws z_{S,l} ~ N(0, 1) for sets in
/// dataset order and customers l = 1..L within each set. Since the residual
/// of customer l is e_{choice} - p-hat(S), W_b is evaluated exactly as the
/// coefficient matrix times the per-(S, i) sums of z over customers who
/// chose i. Throws DomainError for B < 2 or alpha outside (0, 1).
BootstrapQuantile bootstrap_quantile(const ObservedDataset& d, const GapEstimates& g,
                                     const HessianPseudoinverse& hdag,
                                     const PreferenceVector& theta_mle, double alpha, int B,
                                     const Rng& rng);

struct ConfidenceInterval {
    int k_lower = 0;
    int k_upper = 0;
    double alpha = 0.05;
    double c_w_used = 0.0;
    /// One of the threshold sets was empty and its endpoint defaulted to 0.
    bool degenerate = false;

    bool contains(int k) const { return k_lower <= k && k <= k_upper; }
    int width() const { return k_upper - k_lower; }
    friend bool operator==(const ConfidenceInterval&, const ConfidenceInterval&) = default;
};

/// K_L = max{k : Delta-hat_k < -c sd_k}, K_U = max{k : Delta-hat_k <= c sd_k},
/// each 0 when no k qualifies. c_w should be the bootstrap quantile at alpha/2.
ConfidenceInterval confidence_interval(const GapEstimates& g, double c_w, double alpha);

enum class Decision { Reject, FailToReject };

const char* to_string(Decision d);

struct TestOutcome {
    Decision decision;
    /// K0 was empty, so the null can never hold and the test always rejects.
    bool empty_null = false;
};

/// Reject iff {k_lower, ..., k_upper} and K0 are disjoint.
TestOutcome test_property(const ConfidenceInterval& ci, const PropertySet& k0);

struct SingleProductTest {
    Decision decision;
    double lower;
    double upper;
};

/// z-interval Delta-hat_i -+ Phi^{-1}(1 - alpha/2) sd_i; rejects H0: i not in
/// S* iff the upper end is negative.
SingleProductTest single_product_test(const GapEstimates& g, int i, double alpha);

struct InferenceConfig {
    double lambda = 0.0;
    double alpha = 0.05;
    int B = 200;
    FitConfig fit;
};

/// Everything produced by one pass of the estimation and testing pipeline.
struct InferenceResult {
    FitResult fit;
    HessianPseudoinverse hdag;
    GapEstimates gaps;
    BootstrapQuantile bootstrap;
    ConfidenceInterval ci;
    std::vector<std::string> warnings;

    /// Plug-in K = max{k : Delta-hat_k < 0}.
    int k_hat() const { return last_negative(gaps.delta_hat); }
};

/// Fit, debias, then build the (1 - alpha) interval with c_W(alpha/2).
InferenceResult run_inference(const ObservedDataset& d, const RevenueVector& r,
                              const InferenceConfig& config, const Rng& bootstrap_rng);

/// Same pipeline from a given MLE (any gauge). The pipeline only sees the
/// centered MLE, so shifting theta_hat by a constant changes nothing.
InferenceResult run_inference_from_estimate(const ObservedDataset& d, const RevenueVector& r,
                                            const FitResult& fit, const InferenceConfig& config,
                                            const Rng& bootstrap_rng);

}  // namespace assortinf
