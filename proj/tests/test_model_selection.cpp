#include <cmath>
#include <limits>

#include "doctest.h"
#include "paa/model_selection.hpp"

using namespace paa;

namespace {

DataMatrix count_instance(std::uint64_t seed, Index m, Index n) {
    Rng rng(seed);
    Matrix x(m, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i)
            x(i, j) = static_cast<double>(rng.poisson(5.0));
    return DataMatrix(x, Domain::count);
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.array() == b.array()).all();
}

} // namespace

TEST_CASE("restart search returns the stream with the smallest objective") {
    const DataMatrix x = count_instance(31, 4, 10);
    FitConfig config;
    config.k = 3;
    config.max_iter = 40;
    config.restarts = 6;
    config.seed = 12;

    const FitReport best = run_restarts(x, ModelKind::poisson, config);
    double manual_best = std::numeric_limits<double>::infinity();
    std::uint64_t manual_stream = 0;
    for (std::uint64_t s = 0; s < 6; ++s) {
        const FitReport r = fit_poisson(x, config, s);
        if (r.final_nll < manual_best) {
            manual_best = r.final_nll;
            manual_stream = s;
        }
    }
    CHECK(best.final_nll == manual_best);
    CHECK(best.model.seed_used == manual_stream);
}

TEST_CASE("restart search is independent of the thread count") {
    const DataMatrix x = count_instance(32, 4, 12);
    FitConfig config;
    config.k = 3;
    config.max_iter = 30;
    config.restarts = 5;
    config.seed = 7;

    const FitReport a = run_restarts(x, ModelKind::poisson, config, 1);
    const FitReport b = run_restarts(x, ModelKind::poisson, config, 3);
    CHECK(a.final_nll == b.final_nll);
    CHECK(a.model.seed_used == b.model.seed_used);
    CHECK(bitwise_equal(a.model.w.matrix(), b.model.w.matrix()));
    CHECK(bitwise_equal(a.model.h.matrix(), b.model.h.matrix()));
}

TEST_CASE("restart search validates the restart count") {
    const DataMatrix x = count_instance(33, 3, 6);
    FitConfig config;
    config.k = 2;
    config.restarts = 0;
    CHECK_THROWS_AS(run_restarts(x, ModelKind::poisson, config), Error);
}

TEST_CASE("restart errors propagate only when every stream fails") {
    // k > n makes every restart fail with the same shape error
    const DataMatrix x = count_instance(34, 3, 4);
    FitConfig config;
    config.k = 5;
    config.restarts = 3;
    CHECK_THROWS_AS(run_restarts(x, ModelKind::poisson, config),
                    ShapeMismatchError);
}

TEST_CASE("elbow curve covers the requested range and never increases") {
    const DataMatrix x = count_instance(35, 5, 14);
    FitConfig config;
    config.max_iter = 40;
    config.restarts = 3;
    config.seed = 4;

    const ElbowCurve curve = elbow_curve(x, ModelKind::poisson, 1, 5, config);
    REQUIRE(curve.entries.size() == 5);
    for (std::size_t i = 0; i < curve.entries.size(); ++i) {
        CHECK(curve.entries[i].k == static_cast<int>(i) + 1);
        CHECK(curve.entries[i].restarts == 3);
        CHECK(std::isfinite(curve.entries[i].best_nll));
    }
    for (std::size_t i = 1; i < curve.entries.size(); ++i)
        CHECK(curve.entries[i].best_nll <=
              curve.entries[i - 1].best_nll + 1e-6);
    CHECK(curve.suggested_index >= 0);
    CHECK(curve.suggested_index < static_cast<int>(curve.entries.size()));

    SUBCASE("winning stream ids stay within the candidate set") {
        // streams 0..restarts-1 are the random starts; the value `restarts`
        // marks the warm start duplicated from the previous k
        for (std::size_t i = 0; i < curve.entries.size(); ++i)
            CHECK(curve.entries[i].seed_of_best <= 3);
    }
}

TEST_CASE("elbow curve is reproducible and thread-count independent") {
    const DataMatrix x = count_instance(36, 4, 12);
    FitConfig config;
    config.max_iter = 30;
    config.restarts = 3;
    config.seed = 2;

    const ElbowCurve a = elbow_curve(x, ModelKind::poisson, 2, 4, config, 1);
    const ElbowCurve b = elbow_curve(x, ModelKind::poisson, 2, 4, config, 4);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].best_nll == b.entries[i].best_nll);
        CHECK(a.entries[i].seed_of_best == b.entries[i].seed_of_best);
    }
    CHECK(a.suggested_index == b.suggested_index);
}

TEST_CASE("elbow suggestion lands on the true structure of a clean triangle") {
    // 2-d points drawn from a triangle: the residual drops to ~zero at k = 3
    // and stays there, so the largest-gap heuristic must pick k = 3
    Matrix corners(2, 3);
    corners << 0, 6, 0, 0, 0, 5;
    Rng rng(64);
    Matrix x(2, 40);
    for (Index j = 0; j < x.cols(); ++j) {
        const Vector mix = rng.dirichlet(0.3, 3);
        x.col(j) = corners * mix;
    }
    const DataMatrix data(x, Domain::real);
    FitConfig config;
    config.max_iter = 150;
    config.restarts = 4;
    config.seed = 10;
    config.tol = 1e-10;

    const ElbowCurve curve = elbow_curve(data, ModelKind::normal, 1, 6, config);
    REQUIRE(curve.entries.size() == 6);
    CHECK(curve.entries[static_cast<std::size_t>(curve.suggested_index)].k ==
          3);
}

TEST_CASE("elbow range validation") {
    const DataMatrix x = count_instance(37, 3, 6);
    FitConfig config;
    config.restarts = 2;
    CHECK_THROWS_AS(elbow_curve(x, ModelKind::poisson, 0, 3, config), Error);
    CHECK_THROWS_AS(elbow_curve(x, ModelKind::poisson, 4, 3, config), Error);
    CHECK_THROWS_AS(elbow_curve(x, ModelKind::poisson, 2, 8, config), Error);

    SUBCASE("a single-k range yields one entry and suggests it") {
        const ElbowCurve curve =
            elbow_curve(x, ModelKind::poisson, 2, 2, config);
        REQUIRE(curve.entries.size() == 1);
        CHECK(curve.entries[0].k == 2);
        CHECK(curve.suggested_index == 0);
    }
}
