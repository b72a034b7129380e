#include "paa/core.hpp"

#include <cmath>
#include <sstream>

namespace paa {

namespace {

std::string coord(Index i, Index j) {
    std::ostringstream os;
    os << "(" << i << ", " << j << ")";
    return os.str();
}

} // namespace

const char* kind_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::normal: return "normal";
    case ModelKind::poisson: return "poisson";
    case ModelKind::multinomial: return "multinomial";
    case ModelKind::bernoulli: return "bernoulli";
    }
    throw Error("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "normal") return ModelKind::normal;
    if (name == "poisson") return ModelKind::poisson;
    if (name == "multinomial") return ModelKind::multinomial;
    if (name == "bernoulli") return ModelKind::bernoulli;
    throw Error("unknown model kind: " + name);
}

Domain required_domain(ModelKind kind) {
    switch (kind) {
    case ModelKind::normal: return Domain::real;
    case ModelKind::poisson: return Domain::count;
    case ModelKind::multinomial: return Domain::composition;
    case ModelKind::bernoulli: return Domain::binary;
    }
    throw Error("unknown model kind");
}

const char* domain_name(Domain domain) {
    switch (domain) {
    case Domain::real: return "real";
    case Domain::count: return "count";
    case Domain::binary: return "binary";
    case Domain::composition: return "composition";
    }
    throw Error("unknown domain");
}

DataMatrix::DataMatrix(Matrix values, Domain domain)
    : values_(std::move(values)), domain_(domain) {
    if (values_.rows() < 1 || values_.cols() < 1)
        throw ShapeMismatchError("data matrix must be at least 1 x 1");
    for (Index j = 0; j < values_.cols(); ++j) {
        for (Index i = 0; i < values_.rows(); ++i) {
            const double v = values_(i, j);
            if (!std::isfinite(v))
                throw NonFiniteError("non-finite data entry at " + coord(i, j));
            switch (domain_) {
            case Domain::real:
                break;
            case Domain::count:
            case Domain::composition:
                if (v < 0.0 || v != std::floor(v))
                    throw DomainMismatchError(
                        std::string("entry at ") + coord(i, j) +
                        " is not a nonnegative integer (" +
                        domain_name(domain_) + " domain)");
                break;
            case Domain::binary:
                if (v != 0.0 && v != 1.0)
                    throw DomainMismatchError(std::string("entry at ") +
                                              coord(i, j) +
                                              " is not 0/1 (binary domain)");
                break;
            }
        }
    }
}

StochasticMatrix::StochasticMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1)
        throw ShapeMismatchError("stochastic matrix must be at least 1 x 1");
    for (Index j = 0; j < values_.cols(); ++j) {
        double sum = 0.0;
        for (Index i = 0; i < values_.rows(); ++i) {
            const double v = values_(i, j);
            if (!std::isfinite(v))
                throw NonFiniteError("non-finite entry at " + coord(i, j));
            if (v < 0.0)
                throw NegativeEntryError("negative entry at " + coord(i, j));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kColumnSumTol)
            throw Error("column " + std::to_string(j) + " sums to " +
                        std::to_string(sum) + ", expected 1");
    }
}

StochasticMatrix make_stochastic(const Matrix& values) {
    Matrix out = values;
    for (Index j = 0; j < out.cols(); ++j) {
        for (Index i = 0; i < out.rows(); ++i) {
            if (!std::isfinite(out(i, j)))
                throw NonFiniteError("non-finite entry at " + coord(i, j));
            if (out(i, j) < 0.0)
                throw NegativeEntryError("negative entry at " + coord(i, j));
        }
        const double sum = out.col(j).sum();
        if (sum <= 0.0)
            throw ZeroColumnError("column " + std::to_string(j) +
                                  " sums to zero");
        out.col(j) /= sum;
    }
    return StochasticMatrix(std::move(out));
}

void normalize_columns(Matrix& values) {
    for (Index j = 0; j < values.cols(); ++j)
        values.col(j) /= values.col(j).sum();
}

} // namespace paa
