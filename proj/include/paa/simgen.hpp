#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "paa/core.hpp"

namespace paa {

// Synthetic dataset with known ground truth: columns of x are observations
// drawn around convex combinations (true_h) of the true archetype profiles.
struct SyntheticDataset {
    DataMatrix x;
    Matrix true_archetypes; // d x k
    StochasticMatrix true_h; // k x n
};

// Binary data: k archetype profiles with iid Bernoulli(p_s) entries, mixing
// weights Dirichlet(alpha), observations Bernoulli(profiles * h) elementwise.
SyntheticDataset gen_binary(std::uint64_t seed, int k = 6, int d = 10,
                            int n = 100, double p_s = 0.3, double alpha = 0.4);

// Count data: archetype rate profiles are (1) all zeros, (2) iid uniform on
// {1..rate_max}, (3..k) two consecutive nonzero coordinates on disjoint pairs;
// requires d >= 2*(k-2) (DimensionTooSmallError otherwise).  Observations are
// Poisson(profiles * h) with h ~ Dirichlet(alpha).
SyntheticDataset gen_poisson(std::uint64_t seed, int k = 6, int d = 12,
                             int n = 500, int rate_max = 10,
                             double alpha = 0.4);

// Composition data on the 3-part simplex (UnsupportedDimensionError for
// d != 3): k archetypes equally spaced on a circle of radius 0.95 times the
// inradius around the barycenter, observations multinomial with totals uniform
// on {count_min..count_max} and probabilities profiles * h.
SyntheticDataset gen_multinomial(std::uint64_t seed, int k = 5, int d = 3,
                                 int n = 500, int count_min = 1000,
                                 int count_max = 2000, double alpha = 0.5);

enum class MatchMetric { l1, jaccard };

struct MatchResult {
    // assignment[r] = index of the truth archetype matched to recovered
    // archetype r, or nullopt when r's nearest truth column was already
    // claimed by a closer recovered archetype.
    std::vector<std::optional<Index>> assignment;
    Matrix distances; // recovered x truth
    int matched_count = 0;
};

// Greedy uniqueness matching: pairs are claimed in order of increasing
// distance (ties broken lexicographically by recovered then truth index), and
// a recovered archetype is only ever assigned to a truth archetype that is
// nearest to it across the whole distance row; everything else stays blank.
// jaccard binarizes the recovered side at 0.5, demands binary truth columns
// (DomainMismatchError), and treats two empty sets as distance 0.
MatchResult match_archetypes(const Matrix& recovered, const Matrix& truth,
                             MatchMetric metric);

double l1_distance(const Vector& a, const Vector& b);
double jaccard_distance(const Vector& a, const Vector& b);

} // namespace paa
