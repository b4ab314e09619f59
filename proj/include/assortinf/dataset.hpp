#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "assortinf/model.hpp"
#include "assortinf/rng.hpp"

namespace assortinf {

/// Selected offer sets and the L recorded choices for each of them.
///
/// Choices are stored as chosen-item indices (0 = no purchase); the
/// indicator view x_S^{(i,l)} is reconstructed on demand. Immutable after
/// construction.
class ObservedDataset {
public:
    /// Throws ValidationError when any invariant fails.
    ObservedDataset(int n, int L, double p, std::optional<std::uint64_t> seed,
                    std::vector<Assortment> sets, std::vector<std::vector<int>> choices);

    int n() const { return n_; }
    int L() const { return L_; }
    double sampling_p() const { return p_; }
    const std::optional<std::uint64_t>& seed() const { return seed_; }
    const std::vector<Assortment>& sets() const { return sets_; }
    const std::vector<std::vector<int>>& choices() const { return choices_; }
    std::size_t num_sets() const { return sets_.size(); }
    bool empty() const { return sets_.empty(); }

    /// x_S^{(i,l)}.
    int indicator(std::size_t set, int customer, int item) const {
        return choices_[set][static_cast<std::size_t>(customer)] == item ? 1 : 0;
    }
    /// x_S^{(i)} for i in S_+, ordered as Assortment::with_no_purchase().
    Eigen::VectorXd frequencies(std::size_t set) const;
    /// Products that appear in no selected set.
    std::vector<int> uncovered_items() const;

    friend bool operator==(const ObservedDataset&, const ObservedDataset&) = default;

private:
    int n_;
    int L_;
    double p_;
    std::optional<std::uint64_t> seed_;
    std::vector<Assortment> sets_;
    std::vector<std::vector<int>> choices_;
};

/// Simulation scenario: scores, Delta-target profile, sampling and sizes.
struct ScenarioSpec {
    int n = 15;
    double sigma_theta_sq = 3.0;
    int k_star_target = 7;
    double delta_magnitude = 0.001;
    double p = 0.0;  ///< selection probability; use default_selection_probability(n)
    int L = 1000;
    std::uint64_t seed = 0;

    /// Throws DomainError when a field is out of range.
    void validate() const;
};

/// p = n log n / 2^n, capped at 1.
double default_selection_probability(int n);

/// theta_0 = 0 and theta_i ~ N(0, sigma_theta_sq) i.i.d.
PreferenceVector generate_scores(const ScenarioSpec& spec, Rng& rng);

/// Delta_k = -m for k <= K*, 0 at K* + 1 and +m beyond.
Eigen::VectorXd delta_profile(int n, int k_star, double magnitude);

/// Inverts the scaled-gap identity for revenues. `targets[k - 1]` is Delta_k.
/// Throws InfeasibleError when the targets do not yield r_1 >= ... >= r_n > 0.
RevenueVector revenues_from_delta_targets(const PreferenceVector& theta,
                                          const Eigen::VectorXd& targets);

/// Ground truth for one simulated instance.
struct Scenario {
    PreferenceVector theta;
    RevenueVector revenues;
    DeltaSequence delta;  ///< scaled gaps implied by (theta, revenues)
    int k_star;
};

/// Draws scores and solves for revenues, redrawing the scores (on streams
/// split from `rng`) when the profile has no positive revenue solution.
Scenario make_scenario(const ScenarioSpec& spec, Rng& rng);

/// Binomial(trials, p): exact for trials <= 1e6, normal approximation above.
std::uint64_t sample_binomial(std::uint64_t trials, double p, Rng& rng);

/// Bernoulli(p) selection over all 2^n - 1 nonempty subsets, realized as a
/// Binomial count followed by distinct uniform subsets.
std::vector<Assortment> sample_offer_sets(int n, double p, Rng& rng);

/// Draws L multinomial choices per set from the MNL probabilities.
ObservedDataset simulate_choices(const PreferenceVector& theta, std::vector<Assortment> sets,
                                 int L, Rng& rng, double sampling_p = 0.0,
                                 std::optional<std::uint64_t> seed = std::nullopt);

inline constexpr int kDatasetSchemaVersion = 1;

std::string dataset_to_json(const ObservedDataset& d);
/// Throws ParseError for malformed documents, ValidationError for invariant
/// violations.
ObservedDataset dataset_from_json(const std::string& text);

void save_dataset(const ObservedDataset& d, const std::filesystem::path& path);
ObservedDataset load_dataset(const std::filesystem::path& path);

}  // namespace assortinf
