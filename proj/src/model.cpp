#include "assortinf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "assortinf/errors.hpp"

namespace assortinf {

namespace {

void check_item_range(const Assortment& s, int n) {
    if (!s.empty() && s.max_item() > n) {
        throw DomainError("assortment item " + std::to_string(s.max_item()) +
                          " exceeds n = " + std::to_string(n));
    }
}

void check_sizes(const PreferenceVector& theta, const RevenueVector& r) {
    if (theta.n() != r.n()) {
        throw DomainError("score vector has n = " + std::to_string(theta.n()) +
                          " but revenue vector has n = " + std::to_string(r.n()));
    }
}

// Gaps and revenues within this many ulps (relative to the terms they are
// built from) of a tie are treated as ties.
constexpr double kTieUlps = 16.0;

}  // namespace

PreferenceVector::PreferenceVector(Eigen::VectorXd theta, Gauge gauge)
    : theta_(std::move(theta)), gauge_(gauge) {
    if (theta_.size() < 2) throw DomainError("score vector needs n >= 1 products");
    if (!theta_.allFinite()) throw DomainError("score vector has non-finite entries");
    const double largest = theta_.cwiseAbs().maxCoeff();
    if (largest > kMaxAbsScore) {
        throw RangeError("score magnitude " + std::to_string(largest) +
                         " exceeds the supported range of 30");
    }
    switch (gauge_) {
        case Gauge::Anchored:
            if (theta_[0] != 0.0) throw DomainError("anchored gauge requires theta[0] == 0");
            break;
        case Gauge::Centered:
            if (std::abs(theta_.sum()) > 1e-9 * static_cast<double>(theta_.size()) *
                                             std::max(1.0, largest)) {
                throw DomainError("centered gauge requires sum(theta) == 0");
            }
            break;
        case Gauge::Free:
            break;
    }
}

double PreferenceVector::condition_number() const {
    return std::exp(theta_.maxCoeff() - theta_.minCoeff());
}

PreferenceVector PreferenceVector::to_anchored() const {
    Eigen::VectorXd t = theta_.array() - theta_[0];
    t[0] = 0.0;
    return {std::move(t), Gauge::Anchored};
}

PreferenceVector PreferenceVector::to_centered() const {
    return {(theta_.array() - theta_.mean()).matrix(), Gauge::Centered};
}

PreferenceVector PreferenceVector::shifted(double c) const {
    return {(theta_.array() + c).matrix(), Gauge::Free};
}

RevenueVector::RevenueVector(Eigen::VectorXd r) : r_(std::move(r)) {
    if (r_.size() < 2) throw DomainError("revenue vector needs n >= 1 products");
    if (!r_.allFinite()) throw DomainError("revenue vector has non-finite entries");
    if (r_[0] != 0.0) throw DomainError("no-purchase revenue r[0] must be 0");
    for (int i = 1; i + 1 < r_.size(); ++i) {
        if (r_[i] < r_[i + 1]) {
            throw DomainError("revenues must be non-increasing; r[" + std::to_string(i) +
                              "] < r[" + std::to_string(i + 1) + "]");
        }
    }
    if (!(r_[n()] > 0.0)) throw DomainError("revenues must be strictly positive");
}

RevenueVector RevenueVector::from_products(const std::vector<double>& products) {
    Eigen::VectorXd r(products.size() + 1);
    r[0] = 0.0;
    for (std::size_t i = 0; i < products.size(); ++i) r[i + 1] = products[i];
    return RevenueVector(std::move(r));
}

RevenueVector RevenueVector::scaled(double s) const {
    if (!(s > 0.0)) throw DomainError("revenue scale must be positive");
    return RevenueVector(r_ * s);
}

Assortment::Assortment(std::vector<int> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    if (std::adjacent_find(items_.begin(), items_.end()) != items_.end()) {
        throw DomainError("assortment has duplicate items");
    }
    if (!items_.empty() && items_.front() < 1) {
        throw DomainError("assortment items must be product indices >= 1");
    }
}

Assortment Assortment::prefix(int k) {
    std::vector<int> items(static_cast<std::size_t>(std::max(k, 0)));
    for (int i = 0; i < k; ++i) items[i] = i + 1;
    return Assortment(std::move(items));
}

Assortment Assortment::from_mask(std::uint64_t mask) {
    std::vector<int> items;
    for (int bit = 0; mask != 0; ++bit, mask >>= 1) {
        if (mask & 1U) items.push_back(bit + 1);
    }
    Assortment s;
    s.items_ = std::move(items);
    return s;
}

bool Assortment::contains(int item) const {
    return std::binary_search(items_.begin(), items_.end(), item);
}

std::vector<int> Assortment::with_no_purchase() const {
    std::vector<int> out;
    out.reserve(items_.size() + 1);
    out.push_back(0);
    out.insert(out.end(), items_.begin(), items_.end());
    return out;
}

std::uint64_t Assortment::mask() const {
    std::uint64_t m = 0;
    for (int i : items_) m |= std::uint64_t{1} << (i - 1);
    return m;
}

double choice_probability(const PreferenceVector& theta, const Assortment& s, int item) {
    check_item_range(s, theta.n());
    if (item != 0 && !s.contains(item)) {
        throw DomainError("item " + std::to_string(item) + " is not offered");
    }
    double denom = std::exp(theta[0]);
    for (int i : s.items()) denom += std::exp(theta[i]);
    return std::exp(theta[item]) / denom;
}

double expected_revenue(const PreferenceVector& theta, const RevenueVector& r,
                        const Assortment& s) {
    check_sizes(theta, r);
    check_item_range(s, theta.n());
    if (s.empty()) return 0.0;
    double numer = 0.0;
    double denom = std::exp(theta[0]);
    for (int i : s.items()) {
        const double u = std::exp(theta[i]);
        numer += u * r[i];
        denom += u;
    }
    return numer / denom;
}

Eigen::VectorXd deltas_from_scores(const Eigen::VectorXd& u, const RevenueVector& r) {
    const int n = r.n();
    Eigen::VectorXd delta(n);
    delta[0] = -r[1] * u[0];
    double mass = u[0] + u[1];
    for (int k = 1; k < n; ++k) {
        delta[k] = delta[k - 1] + mass * (r[k] - r[k + 1]);
        mass += u[k + 1];
    }
    return delta;
}

DeltaSequence delta_sequence(const PreferenceVector& theta, const RevenueVector& r,
                             bool scaled) {
    check_sizes(theta, r);
    DeltaSequence out{deltas_from_scores(theta.scores(), r), scaled};
    if (scaled) out.values *= std::exp(-theta.mean());
    return out;
}

int last_negative(const Eigen::VectorXd& deltas) {
    for (int k = static_cast<int>(deltas.size()); k >= 1; --k) {
        if (deltas[k - 1] < 0.0) return k;
    }
    return 0;
}

OptimalAssortment optimal_assortment(const PreferenceVector& theta, const RevenueVector& r) {
    check_sizes(theta, r);
    const Eigen::VectorXd u = theta.scores();
    const Eigen::VectorXd delta = deltas_from_scores(u, r);
    const double eps = std::numeric_limits<double>::epsilon();
    int k = 0;
    double mass = u[0];
    while (k < r.n()) {
        mass += u[k + 1];
        const double tol = kTieUlps * eps * (k + 1) * r[1] * mass;
        if (!(delta[k] < -tol)) break;
        ++k;
    }
    return {Assortment::prefix(k), k};
}

BruteForceResult brute_force_optimal(const PreferenceVector& theta, const RevenueVector& r) {
    check_sizes(theta, r);
    const int n = theta.n();
    if (n > kBruteForceMaxItems) {
        throw RefusalError("brute force enumeration refused for n = " + std::to_string(n) +
                           " (limit 20)");
    }
    const Eigen::VectorXd u = theta.scores();
    const double eps = std::numeric_limits<double>::epsilon();
    BruteForceResult best{Assortment{}, 0.0};
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t mask = 1; mask < count; ++mask) {
        double numer = 0.0;
        double denom = u[0];
        for (int i = 1; i <= n; ++i) {
            if (mask & (std::uint64_t{1} << (i - 1))) {
                numer += u[i] * r[i];
                denom += u[i];
            }
        }
        const double revenue = numer / denom;
        const double tol = kTieUlps * eps * n * std::max(revenue, best.revenue);
        if (revenue < best.revenue - tol) continue;
        Assortment candidate = Assortment::from_mask(mask);
        const bool better =
            revenue > best.revenue + tol || candidate.size() < best.set.size() ||
            (candidate.size() == best.set.size() && candidate.items() < best.set.items());
        if (better) best = {std::move(candidate), revenue};
    }
    return best;
}

}  // namespace assortinf
