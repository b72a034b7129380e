#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "paa/rng.hpp"
#include "paa/viz.hpp"

using namespace paa;

namespace {

Matrix random_symmetric_distances(Rng& rng, int k) {
    Matrix d = Matrix::Zero(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            const double v = rng.uniform(0.1, 10.0);
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

double tour_length(const Matrix& dist, const std::vector<Index>& tour) {
    double len = 0.0;
    for (std::size_t i = 0; i < tour.size(); ++i) {
        const Index a = tour[i];
        const Index b = tour[(i + 1) % tour.size()];
        len += dist(a, b);
    }
    return len;
}

std::string test_data_path(const std::string& name) {
    return std::string(PAA_TEST_DATA_DIR) + "/" + name;
}

SimplexLayout small_layout() {
    Matrix z(2, 4);
    z << 0, 2, 2, 0, 0, 0, 2, 2; // unit square corners scaled by 2
    const VertexOrdering ordering = order_vertices(z);
    Matrix hv(4, 3);
    hv << 0.7, 0.1, 0.25, 0.1, 0.6, 0.25, 0.1, 0.2, 0.25, 0.1, 0.1, 0.25;
    const StochasticMatrix h(hv);
    SimplexLayout layout;
    layout.vertex_order = ordering.order;
    layout.vertex_angles = ordering.angles;
    layout.points = project_points(h, ordering.angles);
    layout.whiskers = compute_whiskers(h, layout.points, ordering.angles, 0.5);
    layout.deviance_norm = std::vector<double>{0.0, 0.5, 1.0};
    layout.degenerate_equal_angles = ordering.degenerate;
    return layout;
}

} // namespace

TEST_CASE("exhaustive and dynamic-program tours agree and are canonical") {
    Rng rng(91);
    for (int k = 4; k <= 8; ++k) {
        for (int rep = 0; rep < 6; ++rep) {
            const Matrix d = random_symmetric_distances(rng, k);
            const auto brute = tsp_brute_force(d);
            const auto dp = tsp_held_karp(d);
            REQUIRE(brute.size() == static_cast<std::size_t>(k));
            CHECK(brute == dp);
            CHECK(brute.front() == 0);
            CHECK(brute[1] < brute.back()); // canonical direction
            CHECK(tour_length(d, brute) ==
                  doctest::Approx(tour_length(d, dp)).epsilon(1e-12));
            // every vertex appears exactly once
            auto sorted = brute;
            std::sort(sorted.begin(), sorted.end());
            for (int i = 0; i < k; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
        }
    }

    SUBCASE("tiny inputs") {
        Matrix d2 = random_symmetric_distances(rng, 2);
        CHECK(tsp_brute_force(d2) == std::vector<Index>{0, 1});
        CHECK(tsp_held_karp(d2) == std::vector<Index>{0, 1});
    }
    SUBCASE("non-square input is rejected") {
        CHECK_THROWS_AS(tsp_brute_force(Matrix::Zero(2, 3)),
                        ShapeMismatchError);
    }
}

TEST_CASE("collinear archetypes order along the line") {
    // pairwise distances 0-1-10-11 on a line force the tour (0 1 2 3)
    Matrix z(1, 4);
    z << 0, 1, 10, 11;
    // order_vertices measures distances between archetype profile columns
    const VertexOrdering v = order_vertices(z);
    CHECK(v.order == std::vector<Index>{0, 1, 2, 3});
    CHECK_FALSE(v.degenerate);
    CHECK(v.angles[0] == doctest::Approx(0.0));
    // arcs are proportional to consecutive tour distances: 1, 9, 1, 11
    const double total = 1 + 9 + 1 + 11;
    CHECK(v.angles[1] ==
          doctest::Approx(2.0 * M_PI * 1.0 / total).epsilon(1e-12));
    CHECK(v.angles[2] ==
          doctest::Approx(2.0 * M_PI * 10.0 / total).epsilon(1e-12));
    CHECK(v.angles[3] ==
          doctest::Approx(2.0 * M_PI * 11.0 / total).epsilon(1e-12));
}

TEST_CASE("equidistant archetypes get equal arcs") {
    // three unit-distance-apart corners: every tour has the same length, the
    // lexicographically smallest canonical tour is (0 1 2)
    Matrix z(2, 3);
    const double s = std::sqrt(3.0) / 2.0;
    z << 0, 1, 0.5, 0, 0, s;
    const VertexOrdering v = order_vertices(z);
    CHECK(v.order == std::vector<Index>{0, 1, 2});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(v.angles[i] ==
              doctest::Approx(2.0 * M_PI * static_cast<double>(i) / 3.0)
                  .epsilon(1e-9));
}

TEST_CASE("identical archetypes fall back to equal angles") {
    Matrix z(3, 4);
    for (Index c = 0; c < 4; ++c) z.col(c) = Vector::Constant(3, 2.5);
    const VertexOrdering v = order_vertices(z);
    CHECK(v.degenerate);
    CHECK(v.order == std::vector<Index>{0, 1, 2, 3});
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(v.angles[i] ==
              doctest::Approx(M_PI * static_cast<double>(i) / 2.0)
                  .epsilon(1e-12));
}

TEST_CASE("vertex ordering validates its input") {
    CHECK_THROWS_AS(order_vertices(Matrix::Ones(2, 1)), ShapeMismatchError);
    CHECK_THROWS_AS(order_vertices(Matrix::Ones(2, 16)),
                    TooManyArchetypesError);
}

TEST_CASE("projected points are convex combinations of the vertices") {
    Rng rng(92);
    const int k = 5;
    std::vector<double> angles;
    for (int i = 0; i < k; ++i)
        angles.push_back(2.0 * M_PI * static_cast<double>(i) /
                         static_cast<double>(k));
    Matrix hv(k, 1000);
    for (Index j = 0; j < hv.cols(); ++j) hv.col(j) = rng.dirichlet(0.7, k);
    const StochasticMatrix h(hv);
    const auto points = project_points(h, angles);
    REQUIRE(points.size() == 1000);
    for (Index j = 0; j < hv.cols(); ++j) {
        double ex = 0.0, ey = 0.0;
        for (int r = 0; r < k; ++r) {
            ex += hv(r, j) * std::cos(angles[static_cast<std::size_t>(r)]);
            ey += hv(r, j) * std::sin(angles[static_cast<std::size_t>(r)]);
        }
        CHECK(points[static_cast<std::size_t>(j)][0] ==
              doctest::Approx(ex).epsilon(1e-12));
        CHECK(points[static_cast<std::size_t>(j)][1] ==
              doctest::Approx(ey).epsilon(1e-12));
        // convex combinations of unit vectors stay inside the unit circle
        const double radius =
            std::hypot(points[static_cast<std::size_t>(j)][0],
                       points[static_cast<std::size_t>(j)][1]);
        CHECK(radius <= 1.0 + 1e-12);
    }

    SUBCASE("pure loadings land exactly on their vertex") {
        Matrix pure = Matrix::Zero(k, k);
        pure.diagonal().setOnes();
        const auto verts = project_points(StochasticMatrix(pure), angles);
        for (int r = 0; r < k; ++r) {
            CHECK(verts[static_cast<std::size_t>(r)][0] ==
                  doctest::Approx(std::cos(angles[static_cast<std::size_t>(r)]))
                      .epsilon(1e-12));
            CHECK(verts[static_cast<std::size_t>(r)][1] ==
                  doctest::Approx(std::sin(angles[static_cast<std::size_t>(r)]))
                      .epsilon(1e-12));
        }
    }
    SUBCASE("angle count must match the loading rows") {
        std::vector<double> short_angles(angles.begin(), angles.end() - 1);
        CHECK_THROWS_AS(project_points(h, short_angles), ShapeMismatchError);
    }
}

TEST_CASE("whiskers point at vertices and respect the threshold") {
    const int k = 3;
    std::vector<double> angles{0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};

    Matrix hv(k, 3);
    hv.col(0) << 0.90, 0.06, 0.04;  // only the first loading crosses 0.05
    hv.col(1) << 0.30, 0.30, 0.40;  // all three cross
    hv.col(2) << 1.00, 0.00, 0.00;  // sits exactly on vertex 0
    const StochasticMatrix h(hv);
    const auto points = project_points(h, angles);
    const double scale = 0.4;
    const auto whiskers = compute_whiskers(h, points, angles, scale);
    REQUIRE(whiskers.size() == 3);

    CHECK(whiskers[0].size() == 2); // 0.06 > 0.05 also qualifies
    CHECK(whiskers[1].size() == 3);
    CHECK(whiskers[2].size() == 1);

    // unconstrained whisker length equals scale * loading
    const auto& w10 = whiskers[1][0];
    const double dx = w10.end[0] - points[1][0];
    const double dy = w10.end[1] - points[1][1];
    CHECK(std::hypot(dx, dy) == doctest::Approx(scale * 0.30).epsilon(1e-9));
    // and it points from the observation toward its vertex
    const double vx = std::cos(angles[0]) - points[1][0];
    const double vy = std::sin(angles[0]) - points[1][1];
    const double cross = dx * vy - dy * vx;
    CHECK(std::abs(cross) < 1e-12);
    CHECK(dx * vx + dy * vy > 0.0);

    // a point on the circle cannot grow a whisker beyond it
    const auto& w20 = whiskers[2][0];
    CHECK(std::hypot(w20.end[0], w20.end[1]) <= 1.0 + 1e-12);
    CHECK(w20.end[0] == doctest::Approx(points[2][0]).epsilon(1e-12));
    CHECK(w20.end[1] == doctest::Approx(points[2][1]).epsilon(1e-12));

    SUBCASE("loadings at the threshold exactly are excluded") {
        Matrix edge(2, 1);
        edge << 0.05, 0.95;
        const std::vector<double> two{0.0, M_PI};
        const StochasticMatrix he(edge);
        const auto pts = project_points(he, two);
        const auto ws = compute_whiskers(he, pts, two, 0.5);
        REQUIRE(ws.size() == 1);
        CHECK(ws[0].size() == 1); // only the 0.95 loading
        CHECK(ws[0][0].archetype == 1);
    }
    SUBCASE("whiskers are truncated at the unit circle") {
        Matrix far(2, 1);
        far << 0.999, 0.001; // point nearly at vertex 0
        const std::vector<double> two{0.0, M_PI};
        const StochasticMatrix hf(far);
        const auto pts = project_points(hf, two);
        const auto ws = compute_whiskers(hf, pts, two, 10.0);
        REQUIRE(ws[0].size() == 1);
        const auto& w = ws[0][0];
        CHECK(std::hypot(w.end[0], w.end[1]) <= 1.0 + 1e-9);
    }
}

TEST_CASE("deviance normalization") {
    CHECK(normalize_deviance({0.0, 5.0, 10.0}) ==
          std::vector<double>{0.0, 0.5, 1.0});
    CHECK(normalize_deviance({3.0, 3.0, 3.0}) ==
          std::vector<double>{0.0, 0.0, 0.0});
    CHECK(normalize_deviance({}).empty());
    CHECK_THROWS_AS(normalize_deviance({1.0, std::nan("")}), NonFiniteError);
    CHECK_THROWS_AS(normalize_deviance({-1.0, 2.0}), Error);
}

TEST_CASE("rendered drawings are byte-stable") {
    const SimplexLayout layout = small_layout();
    RenderOptions options;
    options.show_deviance = true;
    options.show_whiskers = true;

    const std::string a = render_svg(layout, options);
    const std::string b = render_svg(layout, options);
    CHECK(a == b);
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("</svg>") != std::string::npos);
    CHECK(a.find("A1") != std::string::npos);
    CHECK(a.find("A4") != std::string::npos);

    SUBCASE("deviance coloring changes the point fills") {
        RenderOptions plain;
        plain.show_deviance = false;
        const std::string no_dev = render_svg(layout, plain);
        CHECK(no_dev != a);
        CHECK(no_dev.find("#4682b4") != std::string::npos);
    }
    SUBCASE("labels can be disabled") {
        RenderOptions unlabeled = options;
        unlabeled.labels = false;
        const std::string svg = render_svg(layout, unlabeled);
        CHECK(svg.find("A1") == std::string::npos);
    }
    SUBCASE("output matches the frozen golden file") {
        std::ifstream in(test_data_path("square_layout.svg"),
                         std::ios::binary);
        REQUIRE(in.good());
        std::stringstream buffer;
        buffer << in.rdbuf();
        CHECK(a == buffer.str());
    }
}
