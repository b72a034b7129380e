#include <string>

#include "doctest.h"
#include "paa/core.hpp"

using namespace paa;

namespace {

template <typename E, typename F>
std::string message_of(F&& fn) {
    try {
        fn();
    } catch (const E& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("model kind names round-trip") {
    for (ModelKind kind : {ModelKind::normal, ModelKind::poisson,
                           ModelKind::multinomial, ModelKind::bernoulli})
        CHECK(kind_from_name(kind_name(kind)) == kind);
    CHECK_THROWS_AS(kind_from_name("gamma"), Error);
}

TEST_CASE("model kinds require their data domains") {
    CHECK(required_domain(ModelKind::normal) == Domain::real);
    CHECK(required_domain(ModelKind::poisson) == Domain::count);
    CHECK(required_domain(ModelKind::bernoulli) == Domain::binary);
    CHECK(required_domain(ModelKind::multinomial) == Domain::composition);
}

TEST_CASE("DataMatrix validates per-domain entries") {
    Matrix ok(2, 2);
    ok << 1, 0, 2, 3;
    CHECK_NOTHROW(DataMatrix(ok, Domain::count));
    CHECK_NOTHROW(DataMatrix(ok, Domain::real));

    Matrix negative = ok;
    negative(1, 0) = -2;
    CHECK_THROWS_AS(DataMatrix(negative, Domain::count), DomainMismatchError);

    Matrix fractional = ok;
    fractional(0, 1) = 0.5;
    CHECK_THROWS_AS(DataMatrix(fractional, Domain::count), DomainMismatchError);
    CHECK_THROWS_AS(DataMatrix(fractional, Domain::composition),
                    DomainMismatchError);

    Matrix two = ok;
    CHECK_THROWS_AS(DataMatrix(two, Domain::binary), DomainMismatchError);
    Matrix binary(2, 2);
    binary << 1, 0, 0, 1;
    CHECK_NOTHROW(DataMatrix(binary, Domain::binary));

    Matrix inf_mat = ok;
    inf_mat(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(DataMatrix(inf_mat, Domain::real), NonFiniteError);

    // errors carry the offending coordinate
    const std::string msg = message_of<DomainMismatchError>(
        [&] { DataMatrix(negative, Domain::count); });
    CHECK(msg.find("1") != std::string::npos);
    CHECK(msg.find("0") != std::string::npos);
}

TEST_CASE("DataMatrix::as_real relabels without copying semantics") {
    Matrix v(2, 1);
    v << 3, 4;
    const DataMatrix counts(v, Domain::count);
    const DataMatrix reals = counts.as_real();
    CHECK(reals.domain() == Domain::real);
    CHECK(reals.values() == counts.values());
}

TEST_CASE("StochasticMatrix enforces nonnegative unit columns") {
    Matrix good(2, 2);
    good << 0.25, 1.0, 0.75, 0.0;
    CHECK_NOTHROW(StochasticMatrix{good});

    Matrix slightly_off = good;
    slightly_off(0, 0) += 5e-10; // inside tolerance
    CHECK_NOTHROW(StochasticMatrix{slightly_off});
    slightly_off(0, 0) += 1e-8; // outside
    CHECK_THROWS_AS(StochasticMatrix{slightly_off}, Error);

    Matrix negative = good;
    negative(0, 0) = -0.25;
    negative(1, 0) = 1.25;
    CHECK_THROWS_AS(StochasticMatrix{negative}, NegativeEntryError);
}

TEST_CASE("make_stochastic normalizes and reports bad input") {
    Matrix v(3, 2);
    v << 1, 2, 2, 2, 1, 6;
    const StochasticMatrix s = make_stochastic(v);
    for (Index j = 0; j < s.cols(); ++j)
        CHECK(s.matrix().col(j).sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.matrix()(0, 0) == doctest::Approx(0.25));

    Matrix zero_col = v;
    zero_col.col(1).setZero();
    CHECK_THROWS_AS(make_stochastic(zero_col), ZeroColumnError);

    Matrix negative = v;
    negative(2, 0) = -1;
    CHECK_THROWS_AS(make_stochastic(negative), NegativeEntryError);

    Matrix nan_mat = v;
    nan_mat(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(make_stochastic(nan_mat), NonFiniteError);
}

TEST_CASE("normalize_columns divides by column sums in place") {
    Matrix v(2, 2);
    v << 1, 3, 3, 1;
    normalize_columns(v);
    CHECK(v(0, 0) == doctest::Approx(0.25));
    CHECK(v(1, 1) == doctest::Approx(0.25));
}
