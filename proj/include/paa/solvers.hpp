#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "paa/core.hpp"
#include "paa/obs_models.hpp"
#include "paa/rng.hpp"

namespace paa {

// Relaxed factor pair used inside the Bernoulli fitter: h = colnorm(g),
// w = colnorm(v).  The multiplicative updates act on g and v so the
// normalization constraint never has to be enforced explicitly.
struct UnnormalizedFactors {
    Matrix g; // k x n
    Matrix v; // n x k
};

struct FitReport {
    ArchetypalModel model;
    int iterations = 0;
    bool converged = false;
    double final_nll = 0.0; // NLL of the packaged (exactly stochastic) model
    // Max |column sum - 1| of the relaxed factors before renormalization;
    // zero for fitters that keep the constraint exact at every step.
    double stochasticity_residual = 0.0;
};

// Optional explicit starting point (relaxed coordinates, strictly positive).
struct WarmStart {
    Matrix w0; // n x k
    Matrix h0; // k x n
};

// Random strictly positive column-stochastic factors.  k = 1 yields the
// unique point h = 1^T, w on the simplex.
std::pair<StochasticMatrix, StochasticMatrix> init_factors(Index n, int k,
                                                           Rng& rng);

// ---------------------------------------------------------------------------
// Single multiplicative / EM update steps (exposed for instrumentation)
// ---------------------------------------------------------------------------

// Poisson majorization-minimization on the penalized objective
//   sum_ij [-x_ij log(LWH)_ij + (LWH)_ij]
//   + penalty * sum_cols(-log s + s) over the column sums s of H and of W.
// The iterates are relaxed (column sums only approximately one).
Matrix update_poisson_h(const Matrix& x, const Matrix& lambda_profiles,
                        const Matrix& w, const Matrix& h, double penalty);
Matrix update_poisson_w(const Matrix& x, const Matrix& lambda_profiles,
                        const Matrix& w, const Matrix& h, double penalty);
double poisson_penalized_objective(const Matrix& x,
                                   const Matrix& lambda_profiles,
                                   const Matrix& w, const Matrix& h,
                                   double penalty);

// Multinomial EM; each step returns an exactly column-stochastic factor.
Matrix update_multinomial_h(const Matrix& x, const Matrix& p_profiles,
                            const Matrix& w, const Matrix& h);
Matrix update_multinomial_w(const Matrix& x, const Matrix& p_profiles,
                            const Matrix& w, const Matrix& h);

// Bernoulli majorization-minimization in the unnormalized parameterization;
// y = 1 - x, q = 1 - p.  h = colnorm(g) and w = colnorm(v) are taken by the
// caller after each step.
Matrix update_bernoulli_g(const Matrix& x, const Matrix& y, const Matrix& p,
                          const Matrix& q, const Matrix& w, const Matrix& h,
                          const Matrix& g);
Matrix update_bernoulli_v(const Matrix& x, const Matrix& y, const Matrix& p,
                          const Matrix& q, const Matrix& w, const Matrix& h,
                          const Matrix& v);

// ---------------------------------------------------------------------------
// Fitters
// ---------------------------------------------------------------------------
// All fitters validate the data domain, require 1 <= k <= n, run from a random
// start drawn from derive_rng(config.seed, stream_id) (or from `warm`), and
// return an exactly column-stochastic model with z = profiles * w.

FitReport fit_normal(const DataMatrix& x, const FitConfig& config,
                     std::uint64_t stream_id = 0,
                     const std::optional<WarmStart>& warm = std::nullopt);
FitReport fit_poisson(const DataMatrix& x, const FitConfig& config,
                      std::uint64_t stream_id = 0,
                      const std::optional<WarmStart>& warm = std::nullopt);
FitReport fit_multinomial(const DataMatrix& x, const FitConfig& config,
                          std::uint64_t stream_id = 0,
                          const std::optional<WarmStart>& warm = std::nullopt);
FitReport fit_bernoulli(const DataMatrix& x, const FitConfig& config,
                        std::uint64_t stream_id = 0,
                        const std::optional<WarmStart>& warm = std::nullopt);

// Dispatch on kind.
FitReport fit_model(const DataMatrix& x, ModelKind kind,
                    const FitConfig& config, std::uint64_t stream_id = 0,
                    const std::optional<WarmStart>& warm = std::nullopt);

// Default stochasticity penalty weights.
double auto_lambda_poisson(const Matrix& x); // 20 * elementwise variance
double auto_lambda_normal(const Matrix& x);  // 200 * mean squared magnitude

// Archetype profiles z = profiles * w.
Matrix archetypes(const ProfileMatrix& profiles, const StochasticMatrix& w);

// Indices of observations with mixing weight above delta per archetype,
// ascending within each archetype.
std::vector<std::vector<Index>> generating_observations(
    const StochasticMatrix& w, double delta);

} // namespace paa
