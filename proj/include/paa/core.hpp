#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace paa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NegativeEntryError final : Error {
    using Error::Error;
};
struct ZeroColumnError final : Error {
    using Error::Error;
};
struct DomainMismatchError final : Error {
    using Error::Error;
};
struct NonFiniteError final : Error {
    using Error::Error;
};
struct EmptyDocumentError final : Error {
    using Error::Error;
};
struct ShapeMismatchError final : Error {
    using Error::Error;
};
struct DimensionTooSmallError final : Error {
    using Error::Error;
};
struct UnsupportedDimensionError final : Error {
    using Error::Error;
};
struct TooManyArchetypesError final : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Observation models and data domains
// ---------------------------------------------------------------------------

enum class ModelKind { normal, poisson, multinomial, bernoulli };

// Elementwise domain of a data matrix.  `composition` is count-valued data
// interpreted column-wise as draws from a multinomial (per-column totals are
// the trial counts).
enum class Domain { real, count, binary, composition };

const char* kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);
Domain required_domain(ModelKind kind);
const char* domain_name(Domain domain);

// ---------------------------------------------------------------------------
// DataMatrix: observations are columns (m features, n observations)
// ---------------------------------------------------------------------------

class DataMatrix {
public:
    DataMatrix(Matrix values, Domain domain);

    const Matrix& values() const { return values_; }
    Domain domain() const { return domain_; }
    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }

    // Same values relabeled as unconstrained reals (e.g. to feed count data to
    // the least-squares model).
    DataMatrix as_real() const { return DataMatrix(values_, Domain::real); }

private:
    Matrix values_;
    Domain domain_;
};

// ---------------------------------------------------------------------------
// StochasticMatrix: nonnegative with columns summing to one
// ---------------------------------------------------------------------------

class StochasticMatrix {
public:
    // Validates nonnegativity and column sums within `kColumnSumTol`.
    explicit StochasticMatrix(Matrix values);

    const Matrix& matrix() const { return values_; }
    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }

    static constexpr double kColumnSumTol = 1e-9;

private:
    Matrix values_;
};

// Normalizes each column of `values` to sum to one.  Throws NegativeEntryError
// or ZeroColumnError (with the offending coordinate) on invalid input.
StochasticMatrix make_stochastic(const Matrix& values);

// In-place column normalization of a strictly positive matrix; no validation.
void normalize_columns(Matrix& values);

// ---------------------------------------------------------------------------
// FitConfig
// ---------------------------------------------------------------------------

enum class InitScheme { dirichlet_uniform };

struct FitConfig {
    int k = 1;               // number of archetypes
    int max_iter = 1000;     // max outer iterations
    double tol = 1e-8;       // relative objective-change stopping threshold
    bool lambda_auto = true; // derive the stochasticity penalty from the data
    double lambda = 0.0;     // penalty weight when lambda_auto is false
    int restarts = 10;       // random restarts for model selection
    std::uint64_t seed = 0;  // master seed; restarts use derived streams
    InitScheme init = InitScheme::dirichlet_uniform;
    double delta = 0.1;       // membership threshold for generating observations
    double prob_floor = 1e-6; // clamp for Bernoulli probability profiles
};

// ---------------------------------------------------------------------------
// ArchetypalModel
// ---------------------------------------------------------------------------

struct ArchetypalModel {
    ModelKind kind = ModelKind::normal;
    StochasticMatrix w;         // n x k, mixing weights of observations
    StochasticMatrix h;         // k x n, archetype loadings per observation
    Matrix z;                   // m x k archetype profiles, z = profiles * w
    std::vector<double> nll_trace; // per-iteration objective values
    FitConfig config;
    std::uint64_t seed_used = 0; // restart stream that produced this model
};

} // namespace paa
