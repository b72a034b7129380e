#include "paa/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "paa/rng.hpp"

namespace paa {

namespace {

// Fixed sub-stream ids so the three generators draw unrelated sequences even
// for the same seed.
constexpr std::uint64_t kBinaryStream = 1;
constexpr std::uint64_t kPoissonStream = 2;
constexpr std::uint64_t kMultinomialStream = 3;

void check_common(int k, int d, int n, double alpha) {
    if (k < 1) throw Error("k must be at least 1");
    if (d < 1) throw Error("d must be at least 1");
    if (n < 1) throw Error("n must be at least 1");
    if (!(alpha > 0.0)) throw Error("alpha must be positive");
}

StochasticMatrix draw_mixing(Rng& rng, int k, int n, double alpha) {
    Matrix h(k, n);
    for (Index j = 0; j < n; ++j) h.col(j) = rng.dirichlet(alpha, k);
    return make_stochastic(h);
}

} // namespace

SyntheticDataset gen_binary(std::uint64_t seed, int k, int d, int n,
                            double p_s, double alpha) {
    check_common(k, d, n, alpha);
    if (p_s < 0.0 || p_s > 1.0) throw Error("p_s must lie in [0, 1]");
    Rng rng = derive_rng(seed, kBinaryStream);
    Matrix e(d, k);
    for (Index c = 0; c < k; ++c)
        for (Index r = 0; r < d; ++r) e(r, c) = rng.bernoulli(p_s) ? 1.0 : 0.0;
    StochasticMatrix h = draw_mixing(rng, k, n, alpha);
    const Matrix probs = e * h.matrix();
    Matrix x(d, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < d; ++i)
            x(i, j) = rng.bernoulli(probs(i, j)) ? 1.0 : 0.0;
    return SyntheticDataset{DataMatrix(std::move(x), Domain::binary),
                            std::move(e), std::move(h)};
}

SyntheticDataset gen_poisson(std::uint64_t seed, int k, int d, int n,
                             int rate_max, double alpha) {
    check_common(k, d, n, alpha);
    if (k < 2) throw Error("k must be at least 2 for the count generator");
    if (rate_max < 1) throw Error("rate_max must be at least 1");
    if (d < 2 * (k - 2))
        throw DimensionTooSmallError(
            "d = " + std::to_string(d) + " cannot host " + std::to_string(k) +
            " archetypes; need d >= 2*(k-2)");
    Rng rng = derive_rng(seed, kPoissonStream);
    Matrix e = Matrix::Zero(d, k);
    // archetype 0 stays all zero
    for (Index r = 0; r < d; ++r)
        e(r, 1) = static_cast<double>(rng.uniform_int(1, rate_max));
    for (Index c = 2; c < k; ++c) {
        const Index base = 2 * (c - 2); // disjoint consecutive pairs
        e(base, c) = static_cast<double>(rng.uniform_int(1, rate_max));
        e(base + 1, c) = static_cast<double>(rng.uniform_int(1, rate_max));
    }
    StochasticMatrix h = draw_mixing(rng, k, n, alpha);
    const Matrix rates = e * h.matrix();
    Matrix x(d, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < d; ++i)
            x(i, j) = static_cast<double>(rng.poisson(rates(i, j)));
    return SyntheticDataset{DataMatrix(std::move(x), Domain::count),
                            std::move(e), std::move(h)};
}

SyntheticDataset gen_multinomial(std::uint64_t seed, int k, int d, int n,
                                 int count_min, int count_max, double alpha) {
    check_common(k, d, n, alpha);
    if (d != 3)
        throw UnsupportedDimensionError(
            "the simplex-circle construction requires d = 3, got d = " +
            std::to_string(d));
    if (k < 3) throw Error("k must be at least 3");
    if (count_min < 1 || count_max < count_min)
        throw Error("need 1 <= count_min <= count_max");
    // k equally spaced points on a circle around the barycenter, radius 0.95
    // of the inradius so every point stays strictly inside the simplex.
    const double radius = 0.95 / std::sqrt(6.0);
    const Vector center = Vector::Constant(3, 1.0 / 3.0);
    Vector u(3), v(3);
    u << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0;
    v << 1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0);
    Matrix e(3, k);
    for (Index c = 0; c < k; ++c) {
        const double angle = 2.0 * M_PI * static_cast<double>(c) / k;
        e.col(c) =
            center + radius * (std::cos(angle) * u + std::sin(angle) * v);
    }
    Rng rng = derive_rng(seed, kMultinomialStream);
    StochasticMatrix h = draw_mixing(rng, k, n, alpha);
    const Matrix probs = e * h.matrix();
    Matrix x(3, n);
    for (Index j = 0; j < n; ++j) {
        const int trials =
            static_cast<int>(rng.uniform_int(count_min, count_max));
        const std::vector<int> counts = rng.multinomial(trials, probs.col(j));
        for (Index i = 0; i < 3; ++i)
            x(i, j) = static_cast<double>(counts[static_cast<std::size_t>(i)]);
    }
    return SyntheticDataset{DataMatrix(std::move(x), Domain::composition),
                            std::move(e), std::move(h)};
}

double l1_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw ShapeMismatchError("l1_distance: lengths differ");
    return (a - b).cwiseAbs().sum();
}

double jaccard_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw ShapeMismatchError("jaccard_distance: lengths differ");
    int inter = 0;
    int uni = 0;
    for (Index i = 0; i < a.size(); ++i) {
        const bool in_a = a(i) != 0.0;
        const bool in_b = b(i) != 0.0;
        inter += in_a && in_b;
        uni += in_a || in_b;
    }
    if (uni == 0) return 0.0; // two empty sets coincide
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

MatchResult match_archetypes(const Matrix& recovered, const Matrix& truth,
                             MatchMetric metric) {
    if (recovered.rows() != truth.rows())
        throw ShapeMismatchError("recovered and truth features differ");
    Matrix rec = recovered;
    if (metric == MatchMetric::jaccard) {
        for (Index j = 0; j < truth.cols(); ++j)
            for (Index i = 0; i < truth.rows(); ++i)
                if (truth(i, j) != 0.0 && truth(i, j) != 1.0)
                    throw DomainMismatchError(
                        "jaccard matching requires binary truth archetypes");
        rec = (rec.array() > 0.5).cast<double>();
    }
    const Index r_count = rec.cols();
    const Index t_count = truth.cols();
    MatchResult result;
    result.distances.resize(r_count, t_count);
    for (Index r = 0; r < r_count; ++r)
        for (Index t = 0; t < t_count; ++t)
            result.distances(r, t) =
                metric == MatchMetric::l1
                    ? l1_distance(rec.col(r), truth.col(t))
                    : jaccard_distance(rec.col(r), truth.col(t));

    // Greedy uniqueness protocol: claim pairs smallest-distance first (lex
    // tie-break); a recovered archetype may only take a truth column that is
    // its global row minimum, otherwise it is left blank.
    std::vector<std::tuple<double, Index, Index>> pairs;
    pairs.reserve(static_cast<std::size_t>(r_count * t_count));
    for (Index r = 0; r < r_count; ++r)
        for (Index t = 0; t < t_count; ++t)
            pairs.emplace_back(result.distances(r, t), r, t);
    std::sort(pairs.begin(), pairs.end());

    result.assignment.assign(static_cast<std::size_t>(r_count), std::nullopt);
    std::vector<bool> row_done(static_cast<std::size_t>(r_count), false);
    std::vector<bool> col_done(static_cast<std::size_t>(t_count), false);
    for (const auto& [d, r, t] : pairs) {
        const auto ri = static_cast<std::size_t>(r);
        const auto ti = static_cast<std::size_t>(t);
        if (row_done[ri] || col_done[ti]) continue;
        if (d == result.distances.row(r).minCoeff()) {
            result.assignment[ri] = t;
            row_done[ri] = true;
            col_done[ti] = true;
            ++result.matched_count;
        } else {
            // every closer truth column was already claimed
            row_done[ri] = true;
        }
    }
    return result;
}

} // namespace paa
