#pragma once

#include "paa/core.hpp"

namespace paa {

// Per-observation maximum-likelihood parameter profiles.  Columns of `values`
// are the natural parameters of each observation's own best-fit distribution:
// identity for real data, identity rates for counts, clamped probabilities for
// binary data, normalized frequencies for compositions.
struct ProfileMatrix {
    Matrix values; // m x n
    ModelKind kind = ModelKind::normal;
};

// Builds the profile matrix for `x` under `kind`.  Throws DomainMismatchError
// when x.domain() is not the domain the model requires, EmptyDocumentError for
// a zero-total column under the multinomial kind.
ProfileMatrix estimate_profiles(const DataMatrix& x, ModelKind kind,
                                double prob_floor = 1e-6);

// Negative log-likelihood of x under the reconstruction profiles * W * H,
// dropping data-only constants.  Normal: squared Frobenius residual.
// Throws NonFiniteError if a log argument falls below 1e-300 and
// DomainMismatchError if profiles.kind != kind or shapes disagree.
double neg_log_likelihood(const DataMatrix& x, const ProfileMatrix& profiles,
                          const StochasticMatrix& w, const StochasticMatrix& h,
                          ModelKind kind);

// Unconstrained-coordinate NLL evaluation used by the gradient code and the
// solver internals; w and h are taken as-is (no stochasticity requirement).
double neg_log_likelihood_raw(const Matrix& x, const Matrix& profiles,
                              const Matrix& w, const Matrix& h, ModelKind kind);

struct NllGradients {
    Matrix dw; // n x k
    Matrix dh; // k x n
};

// Analytic gradients of neg_log_likelihood_raw with respect to W and H.
NllGradients nll_gradients(const Matrix& x, const Matrix& profiles,
                           const Matrix& w, const Matrix& h, ModelKind kind);

// Deviance 2*(loglik_saturated - loglik_fitted) of one observation against its
// fitted mean vector.  The Bernoulli saturated likelihood is clamped to
// [prob_floor, 1 - prob_floor] so both terms stay finite.
double deviance(const Vector& x_col, const Vector& fitted_mean, ModelKind kind,
                double prob_floor = 1e-6);

} // namespace paa
