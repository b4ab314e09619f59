#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include <Eigen/Core>

namespace assortinf {

// Indexing convention used throughout the public API: coordinate 0 is the
// no-purchase option, products are 1..n. Vectors over items therefore have
// length n + 1 and product k lives at index k.

/// Which normalization a score vector satisfies.
enum class Gauge {
    Anchored,  ///< theta[0] == 0
    Centered,  ///< sum(theta) == 0
    Free,      ///< no normalization (e.g. after an explicit shift)
};

/// Largest |theta| accepted before exponentials are considered unsafe.
inline constexpr double kMaxAbsScore = 30.0;

/// Log preference scores theta_0..theta_n tagged with their gauge.
class PreferenceVector {
public:
    /// Throws DomainError on non-finite entries, wrong gauge or n < 1 and
    /// RangeError when max|theta| exceeds kMaxAbsScore.
    PreferenceVector(Eigen::VectorXd theta, Gauge gauge);

    static PreferenceVector anchored(Eigen::VectorXd theta) {
        return {std::move(theta), Gauge::Anchored};
    }
    static PreferenceVector centered(Eigen::VectorXd theta) {
        return {std::move(theta), Gauge::Centered};
    }

    int n() const { return static_cast<int>(theta_.size()) - 1; }
    Gauge gauge() const { return gauge_; }
    const Eigen::VectorXd& values() const { return theta_; }
    double operator[](int i) const { return theta_[i]; }

    double mean() const { return theta_.mean(); }
    /// Preference scores u_i = exp(theta_i).
    Eigen::VectorXd scores() const { return theta_.array().exp().matrix(); }
    /// max u / min u over all n + 1 items.
    double condition_number() const;

    PreferenceVector to_anchored() const;
    PreferenceVector to_centered() const;
    /// theta + c * 1, tagged Free.
    PreferenceVector shifted(double c) const;

private:
    Eigen::VectorXd theta_;
    Gauge gauge_;
};

/// Revenues r_0..r_n with r_0 = 0 and r_1 >= ... >= r_n > 0.
class RevenueVector {
public:
    /// `r` has length n + 1 and r[0] == 0. Throws DomainError otherwise.
    explicit RevenueVector(Eigen::VectorXd r);
    /// Builds from the product revenues r_1..r_n.
    static RevenueVector from_products(const std::vector<double>& products);

    int n() const { return static_cast<int>(r_.size()) - 1; }
    const Eigen::VectorXd& values() const { return r_; }
    double operator[](int i) const { return r_[i]; }
    double condition_number() const { return r_[1] / r_[n()]; }
    RevenueVector scaled(double s) const;

private:
    Eigen::VectorXd r_;
};

/// Offered product set S, stored sorted; S_+ adds the no-purchase option.
class Assortment {
public:
    Assortment() = default;
    /// Sorts the items; throws DomainError on duplicates or indices < 1.
    explicit Assortment(std::vector<int> items);
    Assortment(std::initializer_list<int> items)
        : Assortment(std::vector<int>(items)) {}

    /// {1, ..., k}
    static Assortment prefix(int k);
    /// Items are the set bits of `mask` (bit i - 1 <-> product i).
    static Assortment from_mask(std::uint64_t mask);

    const std::vector<int>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    bool contains(int item) const;
    int max_item() const { return items_.empty() ? 0 : items_.back(); }
    /// S_+ = {0} followed by the items of S.
    std::vector<int> with_no_purchase() const;
    std::uint64_t mask() const;

    friend bool operator==(const Assortment&, const Assortment&) = default;
    friend auto operator<=>(const Assortment&, const Assortment&) = default;

private:
    std::vector<int> items_;
};

/// Marginal revenue gaps Delta_1..Delta_n.
struct DeltaSequence {
    Eigen::VectorXd values;  ///< values[k - 1] holds Delta_k
    bool scaled = false;     ///< true when multiplied by exp(-mean(theta))

    int n() const { return static_cast<int>(values.size()); }
    /// 1-based access: Delta_k.
    double operator()(int k) const { return values[k - 1]; }
};

/// P(item | S) under the MNL model; valid in any gauge.
double choice_probability(const PreferenceVector& theta, const Assortment& s, int item);

/// r(S) = sum_{i in S} u_i r_i / (u_0 + sum_{j in S} u_j). Zero for S = {}.
double expected_revenue(const PreferenceVector& theta, const RevenueVector& r,
                        const Assortment& s);

/// Delta_k = sum_{i<=k} r_i u_i - (sum_{i=0}^{k} u_i) r_k from raw scores u,
/// evaluated through the telescoping recurrence
///   Delta_1 = -r_1 u_0,  Delta_{k+1} = Delta_k + (sum_{i<=k} u_i)(r_k - r_{k+1})
/// so that monotonicity holds exactly in floating point.
Eigen::VectorXd deltas_from_scores(const Eigen::VectorXd& u, const RevenueVector& r);

DeltaSequence delta_sequence(const PreferenceVector& theta, const RevenueVector& r,
                             bool scaled);

struct OptimalAssortment {
    Assortment set;
    int k_star = 0;
};

/// Revenue-ordered scan: K* is the last k before the first Delta_k >= 0.
/// A gap within rounding error of zero counts as zero, so exact ties go to
/// the smaller set even when floating point puts Delta_k a few ulps below 0.
OptimalAssortment optimal_assortment(const PreferenceVector& theta, const RevenueVector& r);

/// Plug-in K = max{k : Delta_k < 0} (0 when no gap is negative).
int last_negative(const Eigen::VectorXd& deltas);

struct BruteForceResult {
    Assortment set;
    double revenue = 0.0;
};

inline constexpr int kBruteForceMaxItems = 20;

/// Enumerates every subset; smallest cardinality wins ties (revenues equal up
/// to rounding), then the lexicographically smallest item list. Throws
/// RefusalError for n > 20.
BruteForceResult brute_force_optimal(const PreferenceVector& theta, const RevenueVector& r);

}  // namespace assortinf
