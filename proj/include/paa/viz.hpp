#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "paa/core.hpp"

namespace paa {

struct Whisker {
    Index archetype = 0;            // target vertex
    std::array<double, 2> end{};    // segment end point
};

struct SimplexLayout {
    std::vector<Index> vertex_order;           // cyclic tour over 0..k-1
    std::vector<double> vertex_angles;         // radians, indexed by archetype
    std::vector<std::array<double, 2>> points; // one per observation
    std::vector<std::vector<Whisker>> whiskers; // per observation, may be empty
    std::optional<std::vector<double>> deviance_norm; // in [0,1] when present
    bool degenerate_equal_angles = false; // all pairwise distances were zero
};

struct VertexOrdering {
    std::vector<Index> order;   // tour as a permutation of 0..k-1, starts at 0
    std::vector<double> angles; // radians per archetype index
    bool degenerate = false;    // equal-angle fallback was taken
};

// Exact minimum cyclic tours through all points of a symmetric distance
// matrix; both return the canonical representative (starts at 0, second
// element smaller than last, lexicographically smallest among equal-length
// tours).
std::vector<Index> tsp_brute_force(const Matrix& dist);
std::vector<Index> tsp_held_karp(const Matrix& dist);

// Orders archetype columns of z on a circle: exact shortest cyclic tour
// (brute force for k <= 8, dynamic program for 9..15, TooManyArchetypesError
// above), then splits 2*pi into arcs proportional to consecutive tour
// distances.  All-zero distances fall back to equal angles with the
// degenerate flag set.
VertexOrdering order_vertices(const Matrix& z);

std::vector<std::array<double, 2>> project_points(
    const StochasticMatrix& h, const std::vector<double>& angles);

// Whiskers for every loading above 0.05: from the point toward the vertex,
// length length_scale * H_kn, truncated at the unit circle.
std::vector<std::vector<Whisker>> compute_whiskers(
    const StochasticMatrix& h, const std::vector<std::array<double, 2>>& points,
    const std::vector<double>& angles, double length_scale);

// Min-max normalization to [0,1]; constant input maps to all zeros.
std::vector<double> normalize_deviance(const std::vector<double>& deviances);

struct RenderOptions {
    bool show_deviance = false;
    bool show_whiskers = false;
    bool labels = true;
};

// Deterministic SVG text: unit circle, chords between tour-adjacent vertices,
// labeled vertices, observation dots (blue-to-white by deviance when
// enabled), whisker segments when enabled.
std::string render_svg(const SimplexLayout& layout, const RenderOptions& options);

} // namespace paa
