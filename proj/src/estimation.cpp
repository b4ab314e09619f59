#include "assortinf/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "assortinf/errors.hpp"

namespace assortinf {

namespace {

void check_dimension(const LikelihoodWorkspace& w, const Eigen::VectorXd& theta) {
    if (theta.size() != w.n() + 1) {
        throw DomainError("score vector length " + std::to_string(theta.size()) +
                          " does not match n + 1 = " + std::to_string(w.n() + 1));
    }
}

// Choice probabilities over S_+ for one set.
Eigen::VectorXd set_probabilities(const LikelihoodWorkspace::SetTerm& t,
                                  const Eigen::VectorXd& theta) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(t.items.size()));
    for (std::size_t j = 0; j < t.items.size(); ++j) p[static_cast<Eigen::Index>(j)] = std::exp(theta[t.items[j]]);
    return p / p.sum();
}

double penalty_value(double lambda, const Eigen::VectorXd& theta) {
    return 0.5 * lambda * (theta.array() - theta.mean()).square().sum();
}

}  // namespace

LikelihoodWorkspace::LikelihoodWorkspace(const ObservedDataset& dataset, double lambda)
    : dataset_(&dataset), lambda_(lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw DomainError("penalty weight lambda must be finite and non-negative");
    }
    terms_.reserve(dataset.num_sets());
    for (std::size_t s = 0; s < dataset.num_sets(); ++s) {
        terms_.push_back({dataset.sets()[s].with_no_purchase(), dataset.frequencies(s)});
    }
    if (terms_.empty()) warnings_.emplace_back("dataset has no selected offer sets");
    const std::vector<int> uncovered = dataset.uncovered_items();
    if (!uncovered.empty()) {
        std::string msg = "products never offered in a selected set:";
        for (int i : uncovered) msg += " " + std::to_string(i);
        warnings_.push_back(std::move(msg));
    }
}

double default_lambda(int n, double p, int L, double c) {
    const double nn = static_cast<double>(n);
    return c * std::sqrt(std::ldexp(p, n) * std::log(nn) / (nn * static_cast<double>(L)));
}

double neg_log_likelihood(const LikelihoodWorkspace& w, const Eigen::VectorXd& theta,
                          Penalty penalty) {
    check_dimension(w, theta);
    double value = 0.0;
    for (const auto& t : w.terms()) {
        double fit = 0.0;
        double partition = 0.0;
        for (std::size_t j = 0; j < t.items.size(); ++j) {
            const double th = theta[t.items[j]];
            fit += t.freq[static_cast<Eigen::Index>(j)] * th;
            partition += std::exp(th);
        }
        value -= fit - std::log(partition);
    }
    if (penalty == Penalty::Included) value += penalty_value(w.lambda(), theta);
    return value;
}

double neg_log_likelihood(const LikelihoodWorkspace& w, const PreferenceVector& theta,
                          Penalty penalty) {
    return neg_log_likelihood(w, theta.values(), penalty);
}

double objective_decrease(const LikelihoodWorkspace& w, const Eigen::VectorXd& from,
                          const Eigen::VectorXd& to, Penalty penalty) {
    check_dimension(w, from);
    check_dimension(w, to);
    const Eigen::VectorXd step = to - from;
    double decrease = 0.0;
    for (const auto& t : w.terms()) {
        double fit = 0.0;
        double partition = 0.0;
        double change = 0.0;
        for (std::size_t j = 0; j < t.items.size(); ++j) {
            const int i = t.items[j];
            const double e = std::exp(from[i]);
            fit += t.freq[static_cast<Eigen::Index>(j)] * step[i];
            partition += e;
            change += e * std::expm1(step[i]);
        }
        decrease += fit - std::log1p(change / partition);
    }
    if (penalty == Penalty::Included) {
        // |c(to)|^2 - |c(from)|^2 = c(step) . (2 c(from) + c(step)), c = centering;
        // differencing the two centered vectors would cancel at small steps.
        const Eigen::ArrayXd a = from.array() - from.mean();
        const Eigen::ArrayXd d = step.array() - step.mean();
        decrease -= 0.5 * w.lambda() * (d * (2.0 * a + d)).sum();
    }
    return decrease;
}

Eigen::VectorXd gradient(const LikelihoodWorkspace& w, const Eigen::VectorXd& theta,
                         Penalty penalty) {
    check_dimension(w, theta);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
    for (const auto& t : w.terms()) {
        const Eigen::VectorXd p = set_probabilities(t, theta);
        for (std::size_t j = 0; j < t.items.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            g[t.items[j]] -= t.freq[jj] - p[jj];
        }
    }
    if (penalty == Penalty::Included) {
        g.array() += w.lambda() * (theta.array() - theta.mean());
    }
    return g;
}

Eigen::VectorXd gradient(const LikelihoodWorkspace& w, const PreferenceVector& theta,
                         Penalty penalty) {
    return gradient(w, theta.values(), penalty);
}

Eigen::MatrixXd hessian(const LikelihoodWorkspace& w, const Eigen::VectorXd& theta,
                        Penalty penalty) {
    check_dimension(w, theta);
    const Eigen::Index dim = theta.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& t : w.terms()) {
        const Eigen::VectorXd p = set_probabilities(t, theta);
        for (std::size_t a = 0; a < t.items.size(); ++a) {
            const double pa = p[static_cast<Eigen::Index>(a)];
            h(t.items[a], t.items[a]) += pa * (1.0 - pa);
            for (std::size_t b = a + 1; b < t.items.size(); ++b) {
                const double off = pa * p[static_cast<Eigen::Index>(b)];
                h(t.items[a], t.items[b]) -= off;
                h(t.items[b], t.items[a]) -= off;
            }
        }
    }
    if (penalty == Penalty::Included) {
        h.diagonal().array() += w.lambda();
        h.array() -= w.lambda() / static_cast<double>(dim);
    }
    return h;
}

Eigen::MatrixXd hessian(const LikelihoodWorkspace& w, const PreferenceVector& theta,
                        Penalty penalty) {
    return hessian(w, theta.values(), penalty);
}

FitResult fit_mle(const LikelihoodWorkspace& w, const FitConfig& config) {
    if (w.empty()) throw DomainError("cannot fit the MLE without selected offer sets");
    if (!(w.lambda() > 0.0)) throw DomainError("fit_mle requires lambda > 0");

    const Eigen::Index dim = w.n() + 1;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    double objective = neg_log_likelihood(w, theta, Penalty::Included);
    Eigen::VectorXd g = gradient(w, theta, Penalty::Included);
    g[0] = 0.0;  // theta_0 is pinned
    double step = 1.0;

    for (int iter = 0;; ++iter) {
        const double gnorm = g.norm();
        if (gnorm <= config.tol) {
            if (config.trace) config.trace({iter, objective, gnorm, 0.0});
            return {PreferenceVector::anchored(theta), iter, gnorm, objective};
        }
        if (iter >= config.max_iters) {
            throw ConvergenceError("MLE did not reach gradient tolerance within " +
                                       std::to_string(config.max_iters) + " iterations",
                                   theta, gnorm, iter);
        }

        const double required = config.armijo_c1 * gnorm * gnorm;
        Eigen::VectorXd next;
        bool accepted = false;
        for (int bt = 0; bt <= config.max_backtracks; ++bt) {
            next = theta - step * g;
            const double decrease = objective_decrease(w, theta, next, Penalty::Included);
            if (decrease >= step * required) {
                objective -= decrease;
                accepted = true;
                break;
            }
            step *= config.backtrack;
        }
        if (!accepted) {
            throw ConvergenceError("line search failed to find a descent step", theta, gnorm,
                                   iter);
        }
        if (config.trace) config.trace({iter, objective, gnorm, step});

        Eigen::VectorXd g_next = gradient(w, next, Penalty::Included);
        g_next[0] = 0.0;
        const Eigen::VectorXd s = next - theta;
        const Eigen::VectorXd y = g_next - g;
        const double sy = s.dot(y);
        // Barzilai-Borwein trial step for the next iteration.
        step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : 2.0 * step;
        theta = std::move(next);
        g = std::move(g_next);
    }
}

HessianPseudoinverse hessian_pseudoinverse(const Eigen::MatrixXd& h) {
    const Eigen::Index dim = h.rows();
    if (h.cols() != dim || dim < 2) throw DomainError("Hessian must be square with n >= 1");
    if (!h.allFinite()) throw DomainError("Hessian has non-finite entries");

    Eigen::MatrixXd bordered(dim + 1, dim + 1);
    bordered.topLeftCorner(dim, dim) = h;
    bordered.col(dim).head(dim).setOnes();
    bordered.row(dim).head(dim).setOnes();
    bordered(dim, dim) = 0.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(bordered);
    const double rcond = lu.isInvertible() ? lu.rcond() : 0.0;
    if (!(rcond * kBorderedConditionLimit >= 1.0)) {
        throw SingularityError(
            "bordered Hessian is numerically singular (rcond = " + std::to_string(rcond) +
                "); the selected offer sets may not connect every product",
            rcond);
    }
    const Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) throw SingularityError("bordered Hessian inverse is not finite", rcond);
    Eigen::MatrixXd block = inv.topLeftCorner(dim, dim);
    return {0.5 * (block + block.transpose()), rcond};
}

PreferenceVector debias(const LikelihoodWorkspace& w, const PreferenceVector& theta_hat,
                        const HessianPseudoinverse& hdag) {
    const Eigen::VectorXd centered = theta_hat.values().array() - theta_hat.mean();
    const Eigen::VectorXd g = gradient(w, theta_hat.values(), Penalty::Excluded);
    return PreferenceVector::centered(centered - hdag.matrix * g);
}

PreferenceVector debias(const LikelihoodWorkspace& w, const PreferenceVector& theta_hat) {
    return debias(w, theta_hat, hessian_pseudoinverse(hessian(w, theta_hat)));
}

}  // namespace assortinf
