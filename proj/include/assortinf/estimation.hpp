#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "assortinf/dataset.hpp"
#include "assortinf/model.hpp"

namespace assortinf {

/// Whether the sample-variance penalty (lambda/2) sum_i (theta_i - mean)^2
/// is part of an evaluation.
enum class Penalty { Excluded, Included };

/// Per-set aggregated frequencies and the penalty weight. Holds a reference
/// to the dataset, which must outlive the workspace.
class LikelihoodWorkspace {
public:
    LikelihoodWorkspace(const ObservedDataset& dataset, double lambda);

    struct SetTerm {
        std::vector<int> items;  ///< S_+ (0 first)
        Eigen::VectorXd freq;    ///< x_S^{(i)} aligned with items
    };

    const ObservedDataset& dataset() const { return *dataset_; }
    double lambda() const { return lambda_; }
    int n() const { return dataset_->n(); }
    const std::vector<SetTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    /// Non-fatal data problems: no selected sets, products never offered.
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    const ObservedDataset* dataset_;
    double lambda_;
    std::vector<SetTerm> terms_;
    std::vector<std::string> warnings_;
};

/// lambda = c * sqrt(2^n p log n / (n L)).
double default_lambda(int n, double p, int L, double c);

/// -sum_S [ sum_{i in S_+} x_S^{(i)} theta_i - log sum_{j in S_+} e^{theta_j} ],
/// plus the penalty when requested. With theta_0 = 0 this is the usual
/// log(1 + sum_{i in S} e^{theta_i}) form.
double neg_log_likelihood(const LikelihoodWorkspace& w, const Eigen::VectorXd& theta,
                          Penalty penalty = Penalty::Included);
double neg_log_likelihood(const LikelihoodWorkspace& w, const PreferenceVector& theta,
                          Penalty penalty = Penalty::Included);

/// f(from) - f(to) evaluated through expm1/log1p so that decreases far below
/// the rounding level of f itself stay resolvable.
double objective_decrease(const LikelihoodWorkspace& w, const Eigen::VectorXd& from,
                          const Eigen::VectorXd& to, Penalty penalty = Penalty::Included);

Eigen::VectorXd gradient(const LikelihoodWorkspace& w, const Eigen::VectorXd& theta,
                         Penalty penalty);
Eigen::VectorXd gradient(const LikelihoodWorkspace& w, const PreferenceVector& theta,
                         Penalty penalty);

/// sum_S (diag(p_S) - p_S p_S^T) over S_+, plus lambda (I - 11^T/(n+1)) when
/// penalized.
Eigen::MatrixXd hessian(const LikelihoodWorkspace& w, const Eigen::VectorXd& theta,
                        Penalty penalty = Penalty::Excluded);
Eigen::MatrixXd hessian(const LikelihoodWorkspace& w, const PreferenceVector& theta,
                        Penalty penalty = Penalty::Excluded);

struct IterationRecord {
    int iteration;
    double objective;
    double gradient_norm;
    double step_size;  ///< step accepted on this iteration (0 for the final record)
};

struct FitConfig {
    double tol = 1e-8;
    int max_iters = 10000;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 60;
    std::function<void(const IterationRecord&)> trace;
};

struct FitResult {
    PreferenceVector theta;  ///< anchored gauge
    int iterations;
    double gradient_norm;
    double objective;
};

/// Penalized MLE over theta_1..theta_n with theta_0 pinned at 0, by gradient
/// descent with Barzilai-Borwein trial steps and Armijo backtracking, started
/// at theta = 0. Every accepted step decreases the objective. Throws
/// ConvergenceError (carrying the last iterate) when max_iters is hit, and
/// DomainError for an empty dataset or lambda <= 0.
FitResult fit_mle(const LikelihoodWorkspace& w, const FitConfig& config = {});

struct HessianPseudoinverse {
    Eigen::MatrixXd matrix;
    double rcond;  ///< reciprocal condition estimate of the bordered system

    int n() const { return static_cast<int>(matrix.rows()) - 1; }
};

inline constexpr double kBorderedConditionLimit = 1e12;

/// Moore-Penrose inverse of a rank-n PSD matrix whose null space is span(1),
/// read off the top-left block of [[H, 1], [1^T, 0]]^{-1}. Throws
/// SingularityError when the bordered matrix has condition above 1e12.
HessianPseudoinverse hessian_pseudoinverse(const Eigen::MatrixXd& h);

/// theta' - H(theta_hat)^+ grad L(theta_hat), with theta' the centered MLE
/// and unpenalized derivatives. Result is in the centered gauge.
PreferenceVector debias(const LikelihoodWorkspace& w, const PreferenceVector& theta_hat,
                        const HessianPseudoinverse& hdag);
PreferenceVector debias(const LikelihoodWorkspace& w, const PreferenceVector& theta_hat);

}  // namespace assortinf
