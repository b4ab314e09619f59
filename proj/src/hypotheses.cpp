#include "assortinf/hypotheses.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "assortinf/errors.hpp"

namespace assortinf {

namespace {

void check_members(int n, const std::vector<int>& a, const char* what) {
    for (int i : a) {
        if (i < 1 || i > n) {
            throw DomainError(std::string(what) + " element " + std::to_string(i) +
                              " outside 1.." + std::to_string(n));
        }
    }
}

std::vector<bool> membership(int n, const std::vector<int>& a) {
    std::vector<bool> in(static_cast<std::size_t>(n) + 1, false);
    for (int i : a) in[static_cast<std::size_t>(i)] = true;
    return in;
}

std::string list(const std::vector<int>& a) {
    std::string s = "{";
    for (std::size_t j = 0; j < a.size(); ++j) s += (j ? "," : "") + std::to_string(a[j]);
    return s + "}";
}

}  // namespace

PropertySet::PropertySet(int n, std::vector<int> k0, std::string description)
    : n_(n), k0_(std::move(k0)), description_(std::move(description)) {
    if (n_ < 1) throw DomainError("property set needs n >= 1");
    std::sort(k0_.begin(), k0_.end());
    k0_.erase(std::unique(k0_.begin(), k0_.end()), k0_.end());
    check_members(n_, k0_, "K0");
}

bool PropertySet::contains(int k) const {
    return std::binary_search(k0_.begin(), k0_.end(), k);
}

int distance_to(int k, const PropertySet& k0) {
    if (k0.empty()) throw DomainError("distance to an empty property set is undefined");
    int best = std::numeric_limits<int>::max();
    for (int i : k0.values()) best = std::min(best, std::abs(i - k));
    return best;
}

PropertySet k0_from_predicate(int n, const std::function<bool(int)>& pred,
                              std::string description) {
    std::vector<int> k0;
    for (int k = 1; k <= n; ++k) {
        if (pred(k)) k0.push_back(k);
    }
    return PropertySet(n, std::move(k0), std::move(description));
}

PropertySet k0_example1(int n, int i) {
    if (i < 1 || i > n) throw DomainError("product index outside 1..n");
    return k0_from_predicate(n, [i](int k) { return k <= i - 1; },
                             "product " + std::to_string(i) + " is not in S*");
}

PropertySet k0_example2(int n, const std::vector<int>& a) {
    check_members(n, a, "A");
    if (a.empty()) throw DomainError("example 2 needs a nonempty set A");
    const int top = *std::max_element(a.begin(), a.end());
    return k0_from_predicate(n, [top](int k) { return k <= top - 1; },
                             list(a) + " is not a subset of S*");
}

PropertySet k0_example3(int n, const std::vector<int>& a) {
    check_members(n, a, "A");
    const auto in = membership(n, a);
    // The predicate holds on the longest prefix contained in A.
    int prefix = 0;
    while (prefix < n && in[static_cast<std::size_t>(prefix) + 1]) ++prefix;
    return k0_from_predicate(n, [prefix](int k) { return k <= prefix; },
                             "S* is a subset of " + list(a));
}

PropertySet k0_example4(int n, const std::vector<int>& a, int q_percent) {
    check_members(n, a, "A");
    if (q_percent < 0 || q_percent > 100) throw DomainError("q must lie in 0..100 percent");
    const auto in = membership(n, a);
    std::vector<int> hits(static_cast<std::size_t>(n) + 1, 0);
    for (int k = 1; k <= n; ++k) hits[k] = hits[k - 1] + (in[k] ? 1 : 0);
    return k0_from_predicate(
        n, [&](int k) { return static_cast<long long>(hits[k]) * 100 > static_cast<long long>(q_percent) * k; },
        "more than " + std::to_string(q_percent) + "% of S* lies in " + list(a));
}

void validate_partition(int n, const Partition& partition) {
    if (partition.empty()) throw ValidationError("partition has no blocks");
    std::vector<int> owner(static_cast<std::size_t>(n) + 1, -1);
    for (std::size_t j = 0; j < partition.size(); ++j) {
        for (int i : partition[j]) {
            if (i < 1 || i > n) {
                throw ValidationError("partition element " + std::to_string(i) +
                                      " outside 1.." + std::to_string(n));
            }
            if (owner[i] != -1) {
                throw ValidationError("product " + std::to_string(i) +
                                      " appears in more than one block");
            }
            owner[i] = static_cast<int>(j);
        }
    }
    for (int i = 1; i <= n; ++i) {
        if (owner[i] == -1) {
            throw ValidationError("product " + std::to_string(i) + " is in no block");
        }
    }
}

PropertySet k0_example5(int n, const Partition& partition) {
    validate_partition(n, partition);
    std::vector<std::size_t> block_of(static_cast<std::size_t>(n) + 1);
    for (std::size_t j = 0; j < partition.size(); ++j) {
        for (int i : partition[j]) block_of[i] = j;
    }
    std::vector<int> counts(partition.size(), 0);
    std::vector<int> k0;
    for (int k = 1; k <= n; ++k) {
        ++counts[block_of[k]];
        if (counts[0] == *std::max_element(counts.begin(), counts.end())) k0.push_back(k);
    }
    return PropertySet(n, std::move(k0), "block 1 holds the most products of S*");
}

PropertySet k0_example6(int n, const Partition& partition, int n0) {
    validate_partition(n, partition);
    std::vector<int> minima;
    for (const auto& block : partition) {
        if (!block.empty()) minima.push_back(*std::min_element(block.begin(), block.end()));
    }
    return k0_from_predicate(
        n,
        [&](int k) {
            return std::count_if(minima.begin(), minima.end(), [k](int m) { return m <= k; }) >= n0;
        },
        "at least " + std::to_string(n0) + " blocks intersect S*");
}

}  // namespace assortinf
