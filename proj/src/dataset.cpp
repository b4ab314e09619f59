#include "assortinf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "assortinf/errors.hpp"

namespace assortinf {

namespace {

constexpr int kMaxItems = 62;
constexpr std::uint64_t kExactBinomialLimit = 1'000'000;
constexpr std::uint64_t kEnumerableSubsets = std::uint64_t{1} << 22;
constexpr int kScenarioAttempts = 1000;

std::string at_set(std::size_t s) { return "set " + std::to_string(s); }

}  // namespace

ObservedDataset::ObservedDataset(int n, int L, double p, std::optional<std::uint64_t> seed,
                                 std::vector<Assortment> sets,
                                 std::vector<std::vector<int>> choices)
    : n_(n), L_(L), p_(p), seed_(seed), sets_(std::move(sets)), choices_(std::move(choices)) {
    if (n_ < 1 || n_ > kMaxItems) throw ValidationError("n must lie in 1..62");
    if (L_ < 1) throw ValidationError("L must be positive");
    if (!(p_ >= 0.0 && p_ <= 1.0)) throw ValidationError("p must lie in [0, 1]");
    if (sets_.size() != choices_.size()) {
        throw ValidationError("sets and choices have different lengths");
    }
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t s = 0; s < sets_.size(); ++s) {
        const Assortment& set = sets_[s];
        if (set.empty()) throw ValidationError(at_set(s) + " is empty");
        if (set.max_item() > n_) {
            throw ValidationError(at_set(s) + " has item " + std::to_string(set.max_item()) +
                                  " outside 1.." + std::to_string(n_));
        }
        if (!seen.insert(set.mask()).second) {
            throw ValidationError(at_set(s) + " duplicates an earlier set");
        }
        if (choices_[s].size() != static_cast<std::size_t>(L_)) {
            throw ValidationError(at_set(s) + " has " + std::to_string(choices_[s].size()) +
                                  " choices, expected L = " + std::to_string(L_));
        }
        for (std::size_t l = 0; l < choices_[s].size(); ++l) {
            const int c = choices_[s][l];
            if (c != 0 && !set.contains(c)) {
                throw ValidationError(at_set(s) + " customer " + std::to_string(l) +
                                      " chose item " + std::to_string(c) + " outside S_+");
            }
        }
    }
}

Eigen::VectorXd ObservedDataset::frequencies(std::size_t set) const {
    const std::vector<int> items = sets_[set].with_no_purchase();
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(items.size()));
    for (int c : choices_[set]) {
        const auto pos = std::lower_bound(items.begin() + 1, items.end(), c);
        freq[c == 0 ? 0 : pos - items.begin()] += 1.0;
    }
    return freq / static_cast<double>(L_);
}

std::vector<int> ObservedDataset::uncovered_items() const {
    std::vector<bool> covered(static_cast<std::size_t>(n_) + 1, false);
    for (const auto& s : sets_) {
        for (int i : s.items()) covered[i] = true;
    }
    std::vector<int> out;
    for (int i = 1; i <= n_; ++i) {
        if (!covered[i]) out.push_back(i);
    }
    return out;
}

void ScenarioSpec::validate() const {
    if (n < 1 || n > kMaxItems) throw DomainError("n must lie in 1..62");
    if (sigma_theta_sq < 0.0) throw DomainError("sigma_theta_sq must be non-negative");
    if (k_star_target < 1 || k_star_target > n) throw DomainError("K* target must lie in 1..n");
    if (!(delta_magnitude > 0.0)) throw DomainError("delta magnitude must be positive");
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("selection probability must lie in (0, 1]");
    if (L < 1) throw DomainError("L must be positive");
}

double default_selection_probability(int n) {
    const double nn = static_cast<double>(n);
    return std::min(1.0, nn * std::log(nn) / std::ldexp(1.0, n));
}

PreferenceVector generate_scores(const ScenarioSpec& spec, Rng& rng) {
    if (spec.sigma_theta_sq < 0.0) throw DomainError("sigma_theta_sq must be non-negative");
    const double sigma = std::sqrt(spec.sigma_theta_sq);
    Eigen::VectorXd theta(spec.n + 1);
    theta[0] = 0.0;
    for (int i = 1; i <= spec.n; ++i) theta[i] = sigma * rng.normal();
    return PreferenceVector::anchored(std::move(theta));
}

Eigen::VectorXd delta_profile(int n, int k_star, double magnitude) {
    Eigen::VectorXd d(n);
    for (int k = 1; k <= n; ++k) {
        d[k - 1] = k <= k_star ? -magnitude : (k == k_star + 1 ? 0.0 : magnitude);
    }
    return d;
}

RevenueVector revenues_from_delta_targets(const PreferenceVector& theta,
                                          const Eigen::VectorXd& targets) {
    const int n = theta.n();
    if (targets.size() != n) throw DomainError("need one Delta target per product");
    if (!(targets[0] < 0.0)) throw InfeasibleError("Delta_1 must be negative (r_1 > 0)");
    for (int k = 1; k < n; ++k) {
        if (targets[k] < targets[k - 1]) {
            throw InfeasibleError("Delta targets must be nondecreasing; violated at k = " +
                                  std::to_string(k + 1));
        }
    }
    const Eigen::VectorXd u = theta.scores();
    const double scale = std::exp(theta.mean());
    Eigen::VectorXd r(n + 1);
    r[0] = 0.0;
    r[1] = -scale * targets[0] / u[0];
    double mass = u[0];
    for (int k = 1; k < n; ++k) {
        mass += u[k];
        r[k + 1] = r[k] - scale * (targets[k] - targets[k - 1]) / mass;
    }
    if (!(r[n] > 0.0)) {
        throw InfeasibleError("Delta targets force a non-positive revenue r_n = " +
                              std::to_string(r[n]));
    }
    return RevenueVector(std::move(r));
}

Scenario make_scenario(const ScenarioSpec& spec, Rng& rng) {
    spec.validate();
    const Eigen::VectorXd targets = delta_profile(spec.n, spec.k_star_target, spec.delta_magnitude);
    for (int attempt = 0; attempt < kScenarioAttempts; ++attempt) {
        Rng draw = rng.split(static_cast<std::uint64_t>(attempt));
        PreferenceVector theta = generate_scores(spec, draw);
        try {
            RevenueVector r = revenues_from_delta_targets(theta, targets);
            DeltaSequence delta = delta_sequence(theta, r, true);
            return {std::move(theta), std::move(r), std::move(delta), spec.k_star_target};
        } catch (const InfeasibleError&) {
        }
    }
    throw InfeasibleError("no feasible revenue profile after 1000 score draws");
}

std::uint64_t sample_binomial(std::uint64_t trials, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial probability must lie in [0, 1]");
    if (trials == 0 || p == 0.0) return 0;
    if (p == 1.0) return trials;
    const double nt = static_cast<double>(trials);
    if (trials > kExactBinomialLimit) {
        const double draw = std::round(nt * p + std::sqrt(nt * p * (1.0 - p)) * rng.normal());
        return static_cast<std::uint64_t>(std::clamp(draw, 0.0, nt));
    }
    if (p > 0.5) return trials - sample_binomial(trials, 1.0 - p, rng);
    if (nt * p < 200.0) {
        // Sequential inversion; the zero-count mass stays above ~1e-121 here.
        const double u = rng.uniform();
        double pmf = std::exp(nt * std::log1p(-p));
        double cdf = pmf;
        const double odds = p / (1.0 - p);
        std::uint64_t k = 0;
        while (u >= cdf && k < trials) {
            pmf *= odds * static_cast<double>(trials - k) / static_cast<double>(k + 1);
            ++k;
            cdf += pmf;
        }
        return k;
    }
    std::uint64_t count = 0;
    for (std::uint64_t t = 0; t < trials; ++t) count += rng.uniform() < p ? 1 : 0;
    return count;
}

std::vector<Assortment> sample_offer_sets(int n, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("selection probability must lie in [0, 1]");
    if (n < 1 || n > kMaxItems) throw DomainError("n must lie in 1..62");
    const std::uint64_t full = (std::uint64_t{1} << n) - 1;  // also the subset count
    const std::uint64_t count = sample_binomial(full, p, rng);

    std::vector<Assortment> sets;
    sets.reserve(count);
    if (count > full / 2) {
        // Dense selection: draw the excluded subsets instead.
        if (full > kEnumerableSubsets) {
            throw DomainError("selection probability too large for n = " + std::to_string(n));
        }
        std::unordered_set<std::uint64_t> excluded;
        while (excluded.size() < full - count) {
            const std::uint64_t mask = rng.next_u64() & full;
            if (mask != 0) excluded.insert(mask);
        }
        for (std::uint64_t mask = 1; mask <= full; ++mask) {
            if (!excluded.contains(mask)) sets.push_back(Assortment::from_mask(mask));
        }
        return sets;
    }
    std::unordered_set<std::uint64_t> chosen;
    while (sets.size() < count) {
        // n fair coin flips, rejecting the empty set and repeats.
        const std::uint64_t mask = rng.next_u64() & full;
        if (mask == 0 || !chosen.insert(mask).second) continue;
        sets.push_back(Assortment::from_mask(mask));
    }
    return sets;
}

ObservedDataset simulate_choices(const PreferenceVector& theta, std::vector<Assortment> sets,
                                 int L, Rng& rng, double sampling_p,
                                 std::optional<std::uint64_t> seed) {
    if (L < 1) throw DomainError("L must be positive");
    std::vector<std::vector<int>> choices(sets.size());
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const std::vector<int> items = sets[s].with_no_purchase();
        if (sets[s].max_item() > theta.n()) throw DomainError(at_set(s) + " exceeds n");
        std::vector<double> cdf(items.size());
        double total = 0.0;
        for (std::size_t j = 0; j < items.size(); ++j) {
            total += std::exp(theta[items[j]]);
            cdf[j] = total;
        }
        for (double& c : cdf) c /= total;
        choices[s].resize(static_cast<std::size_t>(L));
        for (int l = 0; l < L; ++l) {
            const double u = rng.uniform();
            const auto it = std::upper_bound(cdf.begin(), cdf.end() - 1, u);
            choices[s][static_cast<std::size_t>(l)] = items[static_cast<std::size_t>(it - cdf.begin())];
        }
    }
    return ObservedDataset(theta.n(), L, sampling_p, seed, std::move(sets), std::move(choices));
}

std::string dataset_to_json(const ObservedDataset& d) {
    nlohmann::json doc;
    doc["version"] = kDatasetSchemaVersion;
    doc["n"] = d.n();
    doc["L"] = d.L();
    doc["p"] = d.sampling_p();
    doc["seed"] = d.seed() ? nlohmann::json(*d.seed()) : nlohmann::json(nullptr);
    nlohmann::json sets = nlohmann::json::array();
    for (const auto& s : d.sets()) sets.push_back(s.items());
    doc["sets"] = std::move(sets);
    doc["choices"] = d.choices();
    return doc.dump();
}

namespace {

const nlohmann::json& field(const nlohmann::json& doc, const char* name) {
    if (!doc.contains(name)) throw ParseError(std::string("missing field '") + name + "'");
    return doc.at(name);
}

int int_field(const nlohmann::json& doc, const char* name) {
    const auto& v = field(doc, name);
    if (!v.is_number_integer()) {
        throw ParseError(std::string("field '") + name + "' must be an integer");
    }
    return v.get<int>();
}

std::vector<std::vector<int>> int_rows(const nlohmann::json& doc, const char* name) {
    const auto& v = field(doc, name);
    if (!v.is_array()) throw ParseError(std::string("field '") + name + "' must be an array");
    std::vector<std::vector<int>> rows;
    rows.reserve(v.size());
    for (std::size_t r = 0; r < v.size(); ++r) {
        const auto& row = v[r];
        const std::string where = std::string(name) + "[" + std::to_string(r) + "]";
        if (!row.is_array()) throw ParseError("'" + where + "' must be an array");
        std::vector<int> out;
        out.reserve(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!row[c].is_number_integer()) {
                throw ParseError("'" + where + "[" + std::to_string(c) + "]' must be an integer");
            }
            out.push_back(row[c].get<int>());
        }
        rows.push_back(std::move(out));
    }
    return rows;
}

}  // namespace

ObservedDataset dataset_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("dataset is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("dataset document must be a JSON object");
    const int version = int_field(doc, "version");
    if (version != kDatasetSchemaVersion) {
        throw ParseError("unsupported dataset schema version " + std::to_string(version));
    }
    const int n = int_field(doc, "n");
    const int L = int_field(doc, "L");
    const auto& pv = field(doc, "p");
    if (!pv.is_number()) throw ParseError("field 'p' must be a number");
    std::optional<std::uint64_t> seed;
    const auto& sv = field(doc, "seed");
    if (sv.is_number_unsigned()) {
        seed = sv.get<std::uint64_t>();
    } else if (!sv.is_null()) {
        throw ParseError("field 'seed' must be a non-negative integer or null");
    }
    std::vector<Assortment> sets;
    for (auto& items : int_rows(doc, "sets")) {
        try {
            sets.emplace_back(std::move(items));
        } catch (const DomainError& e) {
            throw ValidationError("sets[" + std::to_string(sets.size()) + "]: " + e.what());
        }
    }
    return ObservedDataset(n, L, pv.get<double>(), seed, std::move(sets), int_rows(doc, "choices"));
}

void save_dataset(const ObservedDataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << dataset_to_json(d) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

ObservedDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return dataset_from_json(buf.str());
}

}  // namespace assortinf
