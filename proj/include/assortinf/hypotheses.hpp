#pragma once

#include <functional>
#include <string>
#include <vector>

namespace assortinf {

/// Null hypothesis H0: K* in K0, with K0 a subset of {1, ..., n}.
class PropertySet {
public:
    /// Sorts and deduplicates; throws DomainError for elements outside 1..n.
    PropertySet(int n, std::vector<int> k0, std::string description = {});

    int n() const { return n_; }
    const std::vector<int>& values() const { return k0_; }
    const std::string& description() const { return description_; }
    bool empty() const { return k0_.empty(); }
    bool contains(int k) const;

    friend bool operator==(const PropertySet& a, const PropertySet& b) {
        return a.n_ == b.n_ && a.k0_ == b.k0_;
    }

private:
    int n_;
    std::vector<int> k0_;
    std::string description_;
};

using Partition = std::vector<std::vector<int>>;

/// d(k, K0) = min_{i in K0} |i - k|. Throws DomainError when K0 is empty.
int distance_to(int k, const PropertySet& k0);

/// {k in [n] : pred(k)}
PropertySet k0_from_predicate(int n, const std::function<bool(int)>& pred,
                              std::string description = {});

/// H0: product i is not in S*.  K0 = {k : k <= i - 1}.
PropertySet k0_example1(int n, int i);
/// H0: A is not a subset of S*.  K0 = {k : k <= max(A) - 1}.
PropertySet k0_example2(int n, const std::vector<int>& a);
/// H0: S* is a subset of A.  K0 = {k : every i <= k lies in A}.
PropertySet k0_example3(int n, const std::vector<int>& a);
/// H0: |A cap S*| / |S*| > q%.  Compared as |[k] cap A| * 100 > q * k.
PropertySet k0_example4(int n, const std::vector<int>& a, int q_percent);
/// H0: A_1 has (weakly) the most products of S* among the blocks.
PropertySet k0_example5(int n, const Partition& partition);
/// H0: at least n0 blocks intersect S*.
PropertySet k0_example6(int n, const Partition& partition, int n0);

/// Throws ValidationError unless the blocks are disjoint and cover 1..n.
void validate_partition(int n, const Partition& partition);

}  // namespace assortinf
