#include "paa/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace paa {

namespace {

constexpr double kWhiskerThreshold = 0.05;

double tour_length(const Matrix& dist, const std::vector<Index>& tour) {
    double total = 0.0;
    for (std::size_t i = 0; i < tour.size(); ++i) {
        const Index a = tour[i];
        const Index b = tour[(i + 1) % tour.size()];
        total += dist(a, b);
    }
    return total;
}

void check_square(const Matrix& dist) {
    if (dist.rows() != dist.cols() || dist.rows() < 1)
        throw ShapeMismatchError("distance matrix must be square and nonempty");
}

} // namespace

std::vector<Index> tsp_brute_force(const Matrix& dist) {
    check_square(dist);
    const Index k = dist.rows();
    if (k == 1) return {0};
    if (k == 2) return {0, 1};
    std::vector<Index> rest(static_cast<std::size_t>(k - 1));
    std::iota(rest.begin(), rest.end(), Index{1});
    std::vector<Index> best;
    double best_len = std::numeric_limits<double>::infinity();
    do {
        // each undirected cycle enumerated once, in canonical direction
        if (rest.front() > rest.back()) continue;
        std::vector<Index> tour;
        tour.reserve(static_cast<std::size_t>(k));
        tour.push_back(0);
        tour.insert(tour.end(), rest.begin(), rest.end());
        const double len = tour_length(dist, tour);
        if (len < best_len || (len == best_len && tour < best)) {
            best_len = len;
            best = std::move(tour);
        }
    } while (std::next_permutation(rest.begin(), rest.end()));
    return best;
}

std::vector<Index> tsp_held_karp(const Matrix& dist) {
    check_square(dist);
    const Index k = dist.rows();
    if (k == 1) return {0};
    if (k == 2) return {0, 1};
    const int m = static_cast<int>(k) - 1; // nodes 1..k-1
    const std::size_t full = (std::size_t{1} << m) - 1;
    const double inf = std::numeric_limits<double>::infinity();
    // cost[mask][j]: cheapest path 0 -> ... -> j+1 visiting exactly mask
    std::vector<std::vector<double>> cost(full + 1,
                                          std::vector<double>(m, inf));
    std::vector<std::vector<int>> parent(full + 1, std::vector<int>(m, -1));
    for (int j = 0; j < m; ++j)
        cost[std::size_t{1} << j][j] = dist(0, j + 1);
    for (std::size_t mask = 1; mask <= full; ++mask) {
        for (int j = 0; j < m; ++j) {
            if (!(mask & (std::size_t{1} << j))) continue;
            const double base = cost[mask][j];
            if (base == inf) continue;
            for (int t = 0; t < m; ++t) {
                if (mask & (std::size_t{1} << t)) continue;
                const std::size_t next = mask | (std::size_t{1} << t);
                const double cand = base + dist(j + 1, t + 1);
                if (cand < cost[next][t]) {
                    cost[next][t] = cand;
                    parent[next][t] = j;
                }
            }
        }
    }
    int end = 0;
    double best = inf;
    for (int j = 0; j < m; ++j) {
        const double cand = cost[full][j] + dist(j + 1, 0);
        if (cand < best) {
            best = cand;
            end = j;
        }
    }
    std::vector<Index> path;
    std::size_t mask = full;
    int j = end;
    while (j != -1) {
        path.push_back(static_cast<Index>(j) + 1);
        const int prev = parent[mask][j];
        mask &= ~(std::size_t{1} << j);
        j = prev;
    }
    std::reverse(path.begin(), path.end());
    std::vector<Index> tour;
    tour.reserve(static_cast<std::size_t>(k));
    tour.push_back(0);
    tour.insert(tour.end(), path.begin(), path.end());
    if (tour[1] > tour.back()) std::reverse(tour.begin() + 1, tour.end());
    return tour;
}

VertexOrdering order_vertices(const Matrix& z) {
    const Index k = z.cols();
    if (k < 2) throw ShapeMismatchError("need at least two archetypes to order");
    if (k > 15)
        throw TooManyArchetypesError(
            "exact tour ordering supports at most 15 archetypes, got " +
            std::to_string(k));
    Matrix dist(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j)
            dist(i, j) = (z.col(i) - z.col(j)).norm();

    VertexOrdering out;
    out.angles.assign(static_cast<std::size_t>(k), 0.0);
    if (dist.maxCoeff() == 0.0) {
        out.order.resize(static_cast<std::size_t>(k));
        std::iota(out.order.begin(), out.order.end(), Index{0});
        for (Index i = 0; i < k; ++i)
            out.angles[static_cast<std::size_t>(i)] =
                2.0 * M_PI * static_cast<double>(i) / static_cast<double>(k);
        out.degenerate = true;
        return out;
    }
    out.order = k <= 8 ? tsp_brute_force(dist) : tsp_held_karp(dist);
    // arcs proportional to consecutive tour distances
    std::vector<double> arc(static_cast<std::size_t>(k));
    double total = 0.0;
    for (std::size_t i = 0; i < out.order.size(); ++i) {
        arc[i] = dist(out.order[i], out.order[(i + 1) % out.order.size()]);
        total += arc[i];
    }
    double angle = 0.0;
    for (std::size_t i = 0; i < out.order.size(); ++i) {
        out.angles[static_cast<std::size_t>(out.order[i])] = angle;
        angle += 2.0 * M_PI * arc[i] / total;
    }
    return out;
}

std::vector<std::array<double, 2>> project_points(
    const StochasticMatrix& h, const std::vector<double>& angles) {
    const Matrix& hv = h.matrix();
    if (static_cast<Index>(angles.size()) != hv.rows())
        throw ShapeMismatchError("one angle per archetype row is required");
    std::vector<std::array<double, 2>> points(
        static_cast<std::size_t>(hv.cols()));
    for (Index j = 0; j < hv.cols(); ++j) {
        double x = 0.0;
        double y = 0.0;
        for (Index r = 0; r < hv.rows(); ++r) {
            x += hv(r, j) * std::cos(angles[static_cast<std::size_t>(r)]);
            y += hv(r, j) * std::sin(angles[static_cast<std::size_t>(r)]);
        }
        points[static_cast<std::size_t>(j)] = {x, y};
    }
    return points;
}

std::vector<std::vector<Whisker>> compute_whiskers(
    const StochasticMatrix& h, const std::vector<std::array<double, 2>>& points,
    const std::vector<double>& angles, double length_scale) {
    const Matrix& hv = h.matrix();
    if (static_cast<Index>(angles.size()) != hv.rows())
        throw ShapeMismatchError("one angle per archetype row is required");
    if (static_cast<Index>(points.size()) != hv.cols())
        throw ShapeMismatchError("one projected point per observation is required");
    if (!(length_scale > 0.0)) throw Error("length_scale must be positive");
    std::vector<std::vector<Whisker>> whiskers(points.size());
    for (Index j = 0; j < hv.cols(); ++j) {
        const auto& p = points[static_cast<std::size_t>(j)];
        for (Index r = 0; r < hv.rows(); ++r) {
            const double weight = hv(r, j);
            if (weight <= kWhiskerThreshold) continue;
            const double vx = std::cos(angles[static_cast<std::size_t>(r)]);
            const double vy = std::sin(angles[static_cast<std::size_t>(r)]);
            double dx = vx - p[0];
            double dy = vy - p[1];
            const double norm = std::hypot(dx, dy);
            Whisker w;
            w.archetype = r;
            if (norm < 1e-12) {
                w.end = p; // the point sits on the vertex itself
            } else {
                dx /= norm;
                dy /= norm;
                // stay inside the unit circle: first crossing of the ray
                const double b = p[0] * dx + p[1] * dy;
                const double c = p[0] * p[0] + p[1] * p[1] - 1.0;
                const double disc = std::max(0.0, b * b - c);
                const double reach = -b + std::sqrt(disc);
                const double len = std::min(length_scale * weight, reach);
                w.end = {p[0] + len * dx, p[1] + len * dy};
            }
            whiskers[static_cast<std::size_t>(j)].push_back(w);
        }
    }
    return whiskers;
}

std::vector<double> normalize_deviance(const std::vector<double>& deviances) {
    for (double v : deviances) {
        if (!std::isfinite(v)) throw NonFiniteError("deviance value not finite");
        if (v < 0.0) throw Error("deviance values must be nonnegative");
    }
    if (deviances.empty()) return {};
    const auto [lo_it, hi_it] =
        std::minmax_element(deviances.begin(), deviances.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    std::vector<double> out(deviances.size(), 0.0);
    if (span == 0.0) return out;
    for (std::size_t i = 0; i < deviances.size(); ++i)
        out[i] = (deviances[i] - lo) / span;
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// SVG y axis points down; flip so the layout reads counterclockwise.
std::string fmt_y(double v) { return fmt(-v); }

std::string point_color(const SimplexLayout& layout,
                        const RenderOptions& options, std::size_t n) {
    if (options.show_deviance && layout.deviance_norm &&
        n < layout.deviance_norm->size()) {
        const double t = (*layout.deviance_norm)[n];
        const long c = std::lround(255.0 * t);
        return "rgb(" + std::to_string(c) + "," + std::to_string(c) + ",255)";
    }
    return "#4682b4";
}

} // namespace

std::string render_svg(const SimplexLayout& layout,
                       const RenderOptions& options) {
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" "
           "viewBox=\"-1.3 -1.3 2.6 2.6\" width=\"640\" height=\"640\">\n"
        << "<rect x=\"-1.3\" y=\"-1.3\" width=\"2.6\" height=\"2.6\" "
           "fill=\"white\"/>\n"
        << "<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"#999999\" "
           "stroke-width=\"0.01\"/>\n";
    const std::size_t k = layout.vertex_order.size();
    auto vx = [&](Index a) {
        return std::cos(layout.vertex_angles[static_cast<std::size_t>(a)]);
    };
    auto vy = [&](Index a) {
        return std::sin(layout.vertex_angles[static_cast<std::size_t>(a)]);
    };
    for (std::size_t i = 0; i < k; ++i) {
        const Index a = layout.vertex_order[i];
        const Index b = layout.vertex_order[(i + 1) % k];
        svg << "<line x1=\"" << fmt(vx(a)) << "\" y1=\"" << fmt_y(vy(a))
            << "\" x2=\"" << fmt(vx(b)) << "\" y2=\"" << fmt_y(vy(b))
            << "\" stroke=\"#cccccc\" stroke-width=\"0.008\"/>\n";
    }
    if (options.show_whiskers) {
        for (std::size_t n = 0; n < layout.whiskers.size(); ++n) {
            const auto& p = layout.points[n];
            for (const Whisker& w : layout.whiskers[n]) {
                svg << "<line x1=\"" << fmt(p[0]) << "\" y1=\"" << fmt_y(p[1])
                    << "\" x2=\"" << fmt(w.end[0]) << "\" y2=\""
                    << fmt_y(w.end[1])
                    << "\" stroke=\"#777777\" stroke-width=\"0.005\"/>\n";
            }
        }
    }
    for (std::size_t n = 0; n < layout.points.size(); ++n) {
        const auto& p = layout.points[n];
        svg << "<circle cx=\"" << fmt(p[0]) << "\" cy=\"" << fmt_y(p[1])
            << "\" r=\"0.018\" fill=\"" << point_color(layout, options, n)
            << "\" stroke=\"#333333\" stroke-width=\"0.003\"/>\n";
    }
    for (std::size_t i = 0; i < k; ++i) {
        const Index a = layout.vertex_order[i];
        svg << "<circle cx=\"" << fmt(vx(a)) << "\" cy=\"" << fmt_y(vy(a))
            << "\" r=\"0.035\" fill=\"#d62728\"/>\n";
    }
    if (options.labels) {
        for (std::size_t i = 0; i < k; ++i) {
            const Index a = layout.vertex_order[i];
            svg << "<text x=\"" << fmt(1.16 * vx(a)) << "\" y=\""
                << fmt(-1.16 * vy(a) + 0.04)
                << "\" font-size=\"0.12\" font-family=\"sans-serif\" "
                   "text-anchor=\"middle\" fill=\"#000000\">A"
                << (static_cast<long long>(a) + 1) << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace paa
