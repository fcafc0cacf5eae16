#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace simplexscope {

/// Finite probability space: M atoms with positive weights summing to 1.
struct FiniteProbSpace {
    Eigen::VectorXd weights;

    std::int64_t size() const { return weights.size(); }
    static FiniteProbSpace uniform(std::int64_t m);
};

void validate_space(const FiniteProbSpace& space);

/// Subset of atoms as a packed bit set.
using AtomSet = std::vector<std::uint64_t>;

AtomSet make_atom_set(std::int64_t m);
void atom_set_add(AtomSet& set, std::int64_t atom);
bool atom_set_contains(const AtomSet& set, std::int64_t atom);
double set_measure(const FiniteProbSpace& space, const AtomSet& set);
double intersection_measure(const FiniteProbSpace& space, const AtomSet& a, const AtomSet& b);

/// Family of measurable sets over a common space.
struct SetFamily {
    FiniteProbSpace space;
    std::vector<AtomSet> sets;
};

/// The union-step map f(c) = 2c - c^3/3; strictly above c on (0,1).
double f_iter(double c);

/// Smallest K >= 0 with f^K(c) >= 3/5 (guard band 1e-12 at the threshold).
int f_threshold_steps(double c);

/// Pair constant 2^{K(c)+1}: any family of more than this many sets of
/// measure >= c contains a pair with intersection measure >= c^3/3.
std::int64_t p_constant(double c);

/// Family size guaranteeing n sets with positive common intersection:
/// N(c,1) = 1, N(c,2) = ceil(1/c), N(c,n+1) = 2 N(c^3/3, n) + P_c.
std::int64_t n_bound(double c, int n);

struct PairWitness {
    int i = -1;
    int j = -1;
    double measure = 0.0;
    bool meets_threshold = false;  // measure >= c^3/3
};

/// Best pair by intersection measure, flagged against the c^3/3 threshold.
/// Requires every set to have measure >= c; nullopt when the family has
/// fewer than two sets.
std::optional<PairWitness> extract_pair(const SetFamily& family, double c);

struct LemmaReport {
    std::int64_t trials_requested = 0;
    std::int64_t trials_run = 0;
    std::int64_t counterexamples = 0;
    /// n = 2 equality packings: pairwise-disjoint families whose measures
    /// are exactly c with c * N = 1. These witness sharpness of the
    /// ceil(1/c) bound at measure equality and are recorded separately.
    std::int64_t boundary_cases = 0;
    std::int64_t family_size = 0;
    double min_witness_measure = 0.0;
    bool skipped = false;
    std::string skip_reason;
    /// One constructed near-disjoint family (bit masks) for inspection.
    std::vector<AtomSet> adversarial_example;
};

/// Randomized (plus optional adversarial) verification: builds families of
/// size n_bound(c, n) with every set of measure >= c and searches for n
/// sets with positive-measure common intersection. On a finite space with
/// positive weights that intersection exists iff some atom lies in at
/// least n of the sets, which is what the search checks (equivalent to
/// scanning all n-subsets).
LemmaReport verify_lemma(const FiniteProbSpace& space, double c, int n, std::int64_t trials,
                         std::uint64_t seed, bool adversarial);

struct ExhaustivePairReport {
    bool counterexample_found = false;
    bool boundary_packing_found = false;
    std::int64_t nodes_explored = 0;
    std::int64_t family_size = 0;
};

/// Complete n = 2 check: a family of N = ceil(1/c) sets of measure >= c
/// with no positively-intersecting pair exists iff N pairwise-disjoint
/// minimal sets of measure >= c can be packed. Runs a complete DFS over
/// such packings (atoms assigned in canonical order).
ExhaustivePairReport verify_lemma_exhaustive_pairs(const FiniteProbSpace& space, double c);

}  // namespace simplexscope
