#include <cmath>
#include <vector>

#include "doctest.h"
#include "paa/rng.hpp"

using namespace paa;

TEST_CASE("derived streams are reproducible and distinct") {
    Rng a = derive_rng(42, 7);
    Rng b = derive_rng(42, 7);
    Rng c = derive_rng(42, 8);
    Rng d = derive_rng(43, 7);
    bool differs_c = false;
    bool differs_d = false;
    for (int i = 0; i < 16; ++i) {
        const std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        differs_c |= va != c.next_u64();
        differs_d |= va != d.next_u64();
    }
    CHECK(differs_c);
    CHECK(differs_d);
}

TEST_CASE("uniform doubles stay inside the half-open unit interval") {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform_int covers both endpoints") {
    Rng rng(2);
    bool lo_hit = false;
    bool hi_hit = false;
    for (int i = 0; i < 2000; ++i) {
        const std::int64_t v = rng.uniform_int(3, 9);
        CHECK(v >= 3);
        CHECK(v <= 9);
        lo_hit |= v == 3;
        hi_hit |= v == 9;
    }
    CHECK(lo_hit);
    CHECK(hi_hit);
    CHECK(rng.uniform_int(5, 5) == 5);
}

TEST_CASE("degenerate bernoulli probabilities are exact") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(rng.bernoulli(0.0));
        CHECK(rng.bernoulli(1.0));
    }
}

TEST_CASE("normal draws have the right first two moments") {
    Rng rng(4);
    const int n = 40000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("gamma draws match their mean for large and tiny shapes") {
    Rng rng(5);
    for (double shape : {0.3, 1.0, 4.5}) {
        const int n = 40000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = rng.gamma(shape);
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum / n == doctest::Approx(shape).epsilon(0.05));
    }
}

TEST_CASE("log-space gamma draws stay finite for tiny shapes") {
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
        const double lg = rng.log_gamma_draw(1e-4);
        CHECK(std::isfinite(lg));
    }
}

TEST_CASE("dirichlet draws live on the simplex even for small alpha") {
    Rng rng(7);
    for (double alpha : {0.01, 0.4, 5.0}) {
        Vector mean = Vector::Zero(4);
        for (int i = 0; i < 4000; ++i) {
            const Vector v = rng.dirichlet(alpha, 4);
            CHECK(v.minCoeff() >= 0.0);
            CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
            mean += v;
        }
        mean /= 4000.0;
        for (Index i = 0; i < 4; ++i)
            CHECK(mean(i) == doctest::Approx(0.25).epsilon(0.15));
    }
}

TEST_CASE("poisson draws match mean and variance across the rate split") {
    Rng rng(8);
    for (double rate : {3.0, 120.0}) {
        const int n = 30000;
        double sum = 0.0;
        double sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const int v = rng.poisson(rate);
            CHECK(v >= 0);
            sum += v;
            sum_sq += static_cast<double>(v) * v;
        }
        const double mean = sum / n;
        const double var = sum_sq / n - mean * mean;
        CHECK(mean == doctest::Approx(rate).epsilon(0.03));
        CHECK(var == doctest::Approx(rate).epsilon(0.08));
    }
    for (int i = 0; i < 100; ++i) CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("multinomial counts sum to the trial count and respect zeros") {
    Rng rng(9);
    Vector probs(3);
    probs << 0.2, 0.8, 0.0;
    Vector freq = Vector::Zero(3);
    for (int i = 0; i < 3000; ++i) {
        const std::vector<int> counts = rng.multinomial(50, probs);
        int total = 0;
        for (int c : counts) total += c;
        CHECK(total == 50);
        CHECK(counts[2] == 0);
        for (int c2 = 0; c2 < 3; ++c2) freq(c2) += counts[static_cast<std::size_t>(c2)];
    }
    freq /= 3000.0 * 50.0;
    CHECK(freq(0) == doctest::Approx(0.2).epsilon(0.05));
    CHECK(freq(1) == doctest::Approx(0.8).epsilon(0.05));
}
