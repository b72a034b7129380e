#include "paa/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

namespace paa {

namespace {

constexpr double kDenomFloor = 1e-300;

void check_fit_inputs(const DataMatrix& x, ModelKind kind,
                      const FitConfig& config) {
    if (x.domain() != required_domain(kind))
        throw DomainMismatchError(std::string("fit_") + kind_name(kind) +
                                  " requires " +
                                  domain_name(required_domain(kind)) +
                                  " data, got " + domain_name(x.domain()));
    if (config.k < 1)
        throw ShapeMismatchError("k must be at least 1");
    if (config.k > x.cols())
        throw ShapeMismatchError("k = " + std::to_string(config.k) +
                                 " exceeds the number of observations " +
                                 std::to_string(x.cols()));
    if (config.max_iter < 1) throw Error("max_iter must be at least 1");
    if (!(config.tol > 0.0)) throw Error("tol must be positive");
}

// ratio_ij = x_ij / r_ij where x_ij > 0, else 0; guards the denominator floor
// only where the ratio is actually used.
Matrix zero_safe_ratio(const Matrix& x, const Matrix& r) {
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i)
            if (x(i, j) > 0.0) {
                if (r(i, j) < kDenomFloor)
                    throw NonFiniteError("reconstruction underflow at (" +
                                         std::to_string(i) + ", " +
                                         std::to_string(j) + ")");
                out(i, j) = x(i, j) / r(i, j);
            }
    return out;
}

bool rel_converged(double prev, double cur, double tol) {
    return std::abs(prev - cur) <= tol * std::max(1.0, std::abs(prev));
}

double max_column_sum_deviation(const Matrix& m) {
    double dev = 0.0;
    for (Index j = 0; j < m.cols(); ++j)
        dev = std::max(dev, std::abs(m.col(j).sum() - 1.0));
    return dev;
}

std::pair<Matrix, Matrix> starting_point(const DataMatrix& x,
                                         const FitConfig& config,
                                         std::uint64_t stream_id,
                                         const std::optional<WarmStart>& warm) {
    if (warm) {
        if (warm->w0.rows() != x.cols() || warm->w0.cols() != config.k ||
            warm->h0.rows() != config.k || warm->h0.cols() != x.cols())
            throw ShapeMismatchError("warm start shapes do not match");
        if ((warm->w0.array() <= 0.0).any() || (warm->h0.array() <= 0.0).any())
            throw NegativeEntryError("warm start must be strictly positive");
        return {warm->w0, warm->h0};
    }
    Rng rng = derive_rng(config.seed, stream_id);
    auto [w0, h0] = init_factors(x.cols(), config.k, rng);
    return {w0.matrix(), h0.matrix()};
}

// Exact column renormalization with the scale moved from W into the rows of H
// (which preserves the reconstruction), then plain normalization of H's
// columns (which absorbs the remaining residual).
void renormalize_pair(Matrix& w, Matrix& h) {
    for (Index c = 0; c < w.cols(); ++c) {
        const double t = w.col(c).sum();
        if (t < kDenomFloor) throw NonFiniteError("w column sum underflow");
        w.col(c) /= t;
        h.row(c) *= t;
    }
    for (Index j = 0; j < h.cols(); ++j) {
        const double s = h.col(j).sum();
        if (s < kDenomFloor) throw NonFiniteError("h column sum underflow");
        h.col(j) /= s;
    }
}

FitReport package(const DataMatrix& x, const ProfileMatrix& profiles,
                  ModelKind kind, Matrix w, Matrix h,
                  std::vector<double> trace, const FitConfig& config,
                  std::uint64_t stream_id, int iterations, bool converged,
                  double residual) {
    renormalize_pair(w, h);
    StochasticMatrix ws = make_stochastic(w);
    StochasticMatrix hs = make_stochastic(h);
    FitReport report{
        ArchetypalModel{kind, ws, hs, profiles.values * ws.matrix(),
                        std::move(trace), config, stream_id},
        iterations, converged, 0.0, residual};
    report.final_nll = neg_log_likelihood_raw(
        x.values(), profiles.values, ws.matrix(), hs.matrix(), kind);
    return report;
}

// ---------------------------------------------------------------------------
// Spectral projected gradient with monotone Armijo backtracking
// ---------------------------------------------------------------------------

using Objective = std::function<double(const Matrix&)>;
using Gradient = std::function<Matrix(const Matrix&)>;
using Projection = std::function<void(Matrix&)>;

struct SpgOptions {
    int max_iters = 100;
    double pg_rel_tol = 1e-10; // on the unit-step projected gradient
};

Matrix spg_minimize(Matrix x, const Objective& f, const Gradient& grad,
                    const Projection& project, const SpgOptions& opt) {
    project(x);
    double fx = f(x);
    Matrix g = grad(x);
    double alpha =
        1.0 / std::max(1e-12, g.cwiseAbs().maxCoeff() /
                                  std::max(1.0, x.cwiseAbs().maxCoeff()));
    alpha = std::clamp(alpha, 1e-16, 1e16);
    for (int it = 0; it < opt.max_iters; ++it) {
        Matrix probe = x - g;
        project(probe);
        const double pg = (x - probe).cwiseAbs().maxCoeff();
        if (pg <= opt.pg_rel_tol * std::max(1.0, g.cwiseAbs().maxCoeff()))
            break;
        Matrix cand;
        double fc = fx;
        double a = alpha;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            cand = x - a * g;
            project(cand);
            const Matrix step = cand - x;
            if (step.cwiseAbs().maxCoeff() == 0.0) break;
            fc = f(cand);
            const double dir = (g.array() * step.array()).sum();
            if (fc <= fx + 1e-4 * dir) {
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        if (!accepted || fc > fx) break; // no further monotone progress
        const Matrix gnew = grad(cand);
        const Matrix s = cand - x;
        const Matrix yv = gnew - g;
        const double sy = (s.array() * yv.array()).sum();
        alpha = sy > 1e-300 ? std::clamp(s.squaredNorm() / sy, 1e-16, 1e16)
                            : 1e16;
        x = std::move(cand);
        fx = fc;
        g = gnew;
    }
    return x;
}

// Euclidean projection onto the probability simplex {p >= 0, sum p = 1}.
Vector project_simplex_vec(const Vector& v) {
    const Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0;
    double theta = 0.0;
    for (Index i = 0; i < n; ++i) {
        cum += u[static_cast<std::size_t>(i)];
        const double t = (cum - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0);
}

void project_simplex_columns(Matrix& m) {
    for (Index j = 0; j < m.cols(); ++j) m.col(j) = project_simplex_vec(m.col(j));
}

void project_nonnegative(Matrix& m) { m = m.cwiseMax(0.0); }

double nll_or_inf(const Matrix& x, const Matrix& profiles, const Matrix& w,
                  const Matrix& h, ModelKind kind) {
    try {
        return neg_log_likelihood_raw(x, profiles, w, h, kind);
    } catch (const NonFiniteError&) {
        return std::numeric_limits<double>::infinity();
    }
}

// Monotone simplex-constrained descent on the exact NLL, used to finish the
// relaxed fitters on the feasible set.  Returns the number of sweeps.
int polish_simplex_nll(const Matrix& x, const Matrix& profiles, ModelKind kind,
                       Matrix& w, Matrix& h, double tol, bool& converged) {
    SpgOptions opt;
    opt.max_iters = 40;
    opt.pg_rel_tol = 1e-9;
    double prev = nll_or_inf(x, profiles, w, h, kind);
    converged = false;
    int sweeps = 0;
    while (sweeps < 15) {
        const auto fh = [&](const Matrix& hh) {
            return nll_or_inf(x, profiles, w, hh, kind);
        };
        const auto gh = [&](const Matrix& hh) -> Matrix {
            return nll_gradients(x, profiles, w, hh, kind).dh;
        };
        h = spg_minimize(h, fh, gh, project_simplex_columns, opt);
        const auto fw = [&](const Matrix& ww) {
            return nll_or_inf(x, profiles, ww, h, kind);
        };
        const auto gw = [&](const Matrix& ww) -> Matrix {
            return nll_gradients(x, profiles, ww, h, kind).dw;
        };
        w = spg_minimize(w, fw, gw, project_simplex_columns, opt);
        ++sweeps;
        const double cur = nll_or_inf(x, profiles, w, h, kind);
        if (rel_converged(prev, cur, tol)) {
            converged = true;
            break;
        }
        prev = cur;
    }
    return sweeps;
}

} // namespace

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

std::pair<StochasticMatrix, StochasticMatrix> init_factors(Index n, int k,
                                                           Rng& rng) {
    if (k < 1 || n < k)
        throw ShapeMismatchError("init_factors requires 1 <= k <= n");
    const auto draw = [&rng]() { return 1e-9 + (1.0 - 1e-9) * rng.next_double(); };
    Matrix w(n, k);
    for (Index j = 0; j < w.cols(); ++j)
        for (Index i = 0; i < w.rows(); ++i) w(i, j) = draw();
    Matrix h(k, n);
    for (Index j = 0; j < h.cols(); ++j)
        for (Index i = 0; i < h.rows(); ++i) h(i, j) = draw();
    return {make_stochastic(w), make_stochastic(h)};
}

// ---------------------------------------------------------------------------
// Poisson updates (majorization-minimization on the penalized objective)
// ---------------------------------------------------------------------------

Matrix update_poisson_h(const Matrix& x, const Matrix& lambda_profiles,
                        const Matrix& w, const Matrix& h, double penalty) {
    const Matrix lw = lambda_profiles * w; // m x k
    const Matrix recon = lw * h;           // m x n
    const Matrix ratio = zero_safe_ratio(x, recon);
    const Vector lw_colsum = lw.colwise().sum();
    const Matrix numer = lw.transpose() * ratio; // k x n
    Matrix out(h.rows(), h.cols());
    for (Index j = 0; j < h.cols(); ++j) {
        const double s = h.col(j).sum();
        if (s < kDenomFloor) throw NonFiniteError("h column sum underflow");
        for (Index i = 0; i < h.rows(); ++i) {
            const double denom = lw_colsum(i) + penalty;
            if (denom < kDenomFloor)
                throw NonFiniteError("update denominator underflow");
            out(i, j) = h(i, j) * (numer(i, j) + penalty / s) / denom;
        }
    }
    return out;
}

Matrix update_poisson_w(const Matrix& x, const Matrix& lambda_profiles,
                        const Matrix& w, const Matrix& h, double penalty) {
    const Matrix lw = lambda_profiles * w;
    const Matrix recon = lw * h;
    const Matrix ratio = zero_safe_ratio(x, recon);
    const Matrix numer =
        lambda_profiles.transpose() * (ratio * h.transpose()); // n x k
    const Vector profile_colsum = lambda_profiles.colwise().sum(); // per obs
    const Vector h_rowsum = h.rowwise().sum();                     // per arch
    Matrix out(w.rows(), w.cols());
    for (Index c = 0; c < w.cols(); ++c) {
        const double t = w.col(c).sum();
        if (t < kDenomFloor) throw NonFiniteError("w column sum underflow");
        for (Index r = 0; r < w.rows(); ++r) {
            const double denom = profile_colsum(r) * h_rowsum(c) + penalty;
            if (denom < kDenomFloor)
                throw NonFiniteError("update denominator underflow");
            out(r, c) = w(r, c) * (numer(r, c) + penalty / t) / denom;
        }
    }
    return out;
}

double poisson_penalized_objective(const Matrix& x,
                                   const Matrix& lambda_profiles,
                                   const Matrix& w, const Matrix& h,
                                   double penalty) {
    double obj = neg_log_likelihood_raw(x, lambda_profiles, w, h,
                                        ModelKind::poisson);
    // penalty sum over column sums s: -log s + s, minimized at s = 1
    for (Index j = 0; j < h.cols(); ++j) {
        const double s = h.col(j).sum();
        if (s < kDenomFloor) throw NonFiniteError("h column sum underflow");
        obj += penalty * (-std::log(s) + s);
    }
    for (Index c = 0; c < w.cols(); ++c) {
        const double t = w.col(c).sum();
        if (t < kDenomFloor) throw NonFiniteError("w column sum underflow");
        obj += penalty * (-std::log(t) + t);
    }
    return obj;
}

// ---------------------------------------------------------------------------
// Multinomial EM updates
// ---------------------------------------------------------------------------

Matrix update_multinomial_h(const Matrix& x, const Matrix& p_profiles,
                            const Matrix& w, const Matrix& h) {
    const Matrix pw = p_profiles * w;
    const Matrix recon = pw * h;
    const Matrix ratio = zero_safe_ratio(x, recon);
    Matrix out = h.cwiseProduct(pw.transpose() * ratio);
    for (Index j = 0; j < out.cols(); ++j) {
        const double s = out.col(j).sum();
        if (s < kDenomFloor)
            throw NonFiniteError("h update normalizer underflow");
        out.col(j) /= s;
    }
    return out;
}

Matrix update_multinomial_w(const Matrix& x, const Matrix& p_profiles,
                            const Matrix& w, const Matrix& h) {
    const Matrix pw = p_profiles * w;
    const Matrix recon = pw * h;
    const Matrix ratio = zero_safe_ratio(x, recon);
    Matrix out =
        w.cwiseProduct(p_profiles.transpose() * (ratio * h.transpose()));
    for (Index c = 0; c < out.cols(); ++c) {
        const double t = out.col(c).sum();
        if (t < kDenomFloor)
            throw NonFiniteError("w update normalizer underflow");
        out.col(c) /= t;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bernoulli updates in the unnormalized (G, V) parameterization
// ---------------------------------------------------------------------------

Matrix update_bernoulli_g(const Matrix& x, const Matrix& y, const Matrix& p,
                          const Matrix& q, const Matrix& w, const Matrix& h,
                          const Matrix& g) {
    const Matrix pw = p * w;
    const Matrix qw = q * w;
    const Matrix rx = zero_safe_ratio(x, pw * h);
    const Matrix ry = zero_safe_ratio(y, qw * h);
    const Matrix numer = pw.transpose() * rx + qw.transpose() * ry; // k x n
    Matrix out(g.rows(), g.cols());
    for (Index j = 0; j < g.cols(); ++j) {
        const double denom = x.col(j).sum() + y.col(j).sum();
        if (denom < kDenomFloor)
            throw NonFiniteError("g update denominator underflow");
        out.col(j) = g.col(j).cwiseProduct(numer.col(j)) / denom;
    }
    return out;
}

Matrix update_bernoulli_v(const Matrix& x, const Matrix& y, const Matrix& p,
                          const Matrix& q, const Matrix& w, const Matrix& h,
                          const Matrix& v) {
    const Matrix pw = p * w;
    const Matrix qw = q * w;
    const Matrix rx = zero_safe_ratio(x, pw * h);
    const Matrix ry = zero_safe_ratio(y, qw * h);
    const Matrix numer =
        p.transpose() * (rx * h.transpose()) + q.transpose() * (ry * h.transpose());
    // denominator is constant down each column (per archetype)
    const Vector denom =
        (pw.transpose() * rx + qw.transpose() * ry).cwiseProduct(h).rowwise().sum();
    Matrix out(v.rows(), v.cols());
    for (Index c = 0; c < v.cols(); ++c) {
        if (denom(c) < kDenomFloor)
            throw NonFiniteError("v update denominator underflow");
        out.col(c) = v.col(c).cwiseProduct(numer.col(c)) / denom(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fitters
// ---------------------------------------------------------------------------

double auto_lambda_poisson(const Matrix& x) {
    const double count = static_cast<double>(x.size());
    const double mean = x.sum() / count;
    const double var =
        (x.array() - mean).square().sum() / std::max(1.0, count - 1.0);
    const double lambda = 20.0 * var;
    return lambda > 0.0 ? lambda : 1.0;
}

double auto_lambda_normal(const Matrix& x) {
    const double mean_sq = x.array().square().sum() / static_cast<double>(x.size());
    const double lambda = 200.0 * mean_sq;
    return lambda > 0.0 ? lambda : 1.0;
}

FitReport fit_poisson(const DataMatrix& x, const FitConfig& config,
                      std::uint64_t stream_id,
                      const std::optional<WarmStart>& warm) {
    check_fit_inputs(x, ModelKind::poisson, config);
    const ProfileMatrix profiles = estimate_profiles(x, ModelKind::poisson);
    const Matrix& xv = x.values();
    const double penalty =
        config.lambda_auto ? auto_lambda_poisson(xv) : config.lambda;
    if (!(penalty > 0.0)) throw Error("stochasticity penalty must be positive");
    auto [w, h] = starting_point(x, config, stream_id, warm);

    std::vector<double> trace;
    trace.push_back(
        neg_log_likelihood_raw(xv, profiles.values, w, h, ModelKind::poisson));
    bool converged = false;
    int it = 0;
    double residual = 0.0;
    // A warm start is already feasible, so the relaxed multiplicative phase
    // (whose renormalization would perturb the objective) is skipped and only
    // the exact-constraint polish below runs.
    if (!warm) {
        while (it < config.max_iter) {
            h = update_poisson_h(xv, profiles.values, w, h, penalty);
            w = update_poisson_w(xv, profiles.values, w, h, penalty);
            ++it;
            const double nll = neg_log_likelihood_raw(xv, profiles.values, w,
                                                      h, ModelKind::poisson);
            const double prev = trace.back();
            trace.push_back(nll);
            if (rel_converged(prev, nll, config.tol)) {
                converged = true;
                break;
            }
        }
        residual =
            std::max(max_column_sum_deviation(w), max_column_sum_deviation(h));
        renormalize_pair(w, h);
    }
    // Finish on the feasible set: monotone descent on the exact NLL removes
    // the small bias the lambda-relaxation leaves behind.
    bool polish_converged = false;
    it += polish_simplex_nll(xv, profiles.values, ModelKind::poisson, w, h,
                             config.tol, polish_converged);
    if (warm) converged = polish_converged;
    FitConfig echo = config;
    echo.lambda = penalty;
    return package(x, profiles, ModelKind::poisson, std::move(w), std::move(h),
                   std::move(trace), echo, stream_id, it, converged, residual);
}

FitReport fit_multinomial(const DataMatrix& x, const FitConfig& config,
                          std::uint64_t stream_id,
                          const std::optional<WarmStart>& warm) {
    check_fit_inputs(x, ModelKind::multinomial, config);
    const ProfileMatrix profiles = estimate_profiles(x, ModelKind::multinomial);
    const Matrix& xv = x.values();
    auto [w, h] = starting_point(x, config, stream_id, warm);

    std::vector<double> trace;
    trace.push_back(neg_log_likelihood_raw(xv, profiles.values, w, h,
                                           ModelKind::multinomial));
    bool converged = false;
    int it = 0;
    while (it < config.max_iter) {
        h = update_multinomial_h(xv, profiles.values, w, h);
        w = update_multinomial_w(xv, profiles.values, w, h);
        ++it;
        const double nll = neg_log_likelihood_raw(xv, profiles.values, w, h,
                                                  ModelKind::multinomial);
        const double prev = trace.back();
        trace.push_back(nll);
        if (rel_converged(prev, nll, config.tol)) {
            converged = true;
            break;
        }
    }
    return package(x, profiles, ModelKind::multinomial, std::move(w),
                   std::move(h), std::move(trace), config, stream_id, it,
                   converged, 0.0);
}

FitReport fit_bernoulli(const DataMatrix& x, const FitConfig& config,
                        std::uint64_t stream_id,
                        const std::optional<WarmStart>& warm) {
    check_fit_inputs(x, ModelKind::bernoulli, config);
    const ProfileMatrix profiles =
        estimate_profiles(x, ModelKind::bernoulli, config.prob_floor);
    const Matrix& xv = x.values();
    const Matrix y = Matrix::Ones(xv.rows(), xv.cols()) - xv;
    const Matrix& p = profiles.values;
    const Matrix q = Matrix::Ones(p.rows(), p.cols()) - p;

    auto [w, h] = starting_point(x, config, stream_id, warm);
    UnnormalizedFactors factors{h, w};

    std::vector<double> trace;
    trace.push_back(
        neg_log_likelihood_raw(xv, p, w, h, ModelKind::bernoulli));
    bool converged = false;
    int it = 0;
    while (it < config.max_iter) {
        factors.g = update_bernoulli_g(xv, y, p, q, w, h, factors.g);
        h = factors.g;
        normalize_columns(h);
        factors.g = h; // keep the unnormalized iterate well scaled
        factors.v = update_bernoulli_v(xv, y, p, q, w, h, factors.v);
        w = factors.v;
        normalize_columns(w);
        factors.v = w;
        ++it;
        const double nll =
            neg_log_likelihood_raw(xv, p, w, h, ModelKind::bernoulli);
        const double prev = trace.back();
        trace.push_back(nll);
        if (rel_converged(prev, nll, config.tol)) {
            converged = true;
            break;
        }
    }
    return package(x, profiles, ModelKind::bernoulli, std::move(w),
                   std::move(h), std::move(trace), config, stream_id, it,
                   converged, 0.0);
}

FitReport fit_normal(const DataMatrix& x, const FitConfig& config,
                     std::uint64_t stream_id,
                     const std::optional<WarmStart>& warm) {
    check_fit_inputs(x, ModelKind::normal, config);
    const ProfileMatrix profiles = estimate_profiles(x, ModelKind::normal);
    const Matrix& xv = x.values();
    const Index m = xv.rows();
    const Index n = xv.cols();
    const Index k = config.k;
    const double lambda =
        config.lambda_auto ? auto_lambda_normal(xv) : config.lambda;
    if (!(lambda > 0.0)) throw Error("stochasticity penalty must be positive");
    const double sqrt_lambda = std::sqrt(lambda);

    auto [w, h] = starting_point(x, config, stream_id, warm);

    const auto rss = [&](const Matrix& ww, const Matrix& hh) {
        return (xv - xv * ww * hh).squaredNorm();
    };
    const auto penalized = [&](const Matrix& ww, const Matrix& hh) {
        double pen = 0.0;
        for (Index c = 0; c < ww.cols(); ++c)
            pen += (ww.col(c).sum() - 1.0) * (ww.col(c).sum() - 1.0);
        for (Index j = 0; j < hh.cols(); ++j)
            pen += (hh.col(j).sum() - 1.0) * (hh.col(j).sum() - 1.0);
        return rss(ww, hh) + lambda * pen;
    };

    // Phase 1: the relaxed alternating scheme.  Each half step solves a
    // penalized nonnegative least-squares subproblem written as an augmented
    // plain NNLS (the penalty becomes one extra row of sqrt(lambda)).
    SpgOptions inner1;
    inner1.max_iters = 100;
    inner1.pg_rel_tol = 1e-9;
    double f_prev = penalized(w, h);
    int phase1 = 0;
    // Warm starts are already feasible; go straight to the exact phase.
    while (!warm && phase1 < config.max_iter) {
        {
            Matrix a(m + 1, k);
            a.topRows(m) = xv * w;
            a.bottomRows(1).setConstant(sqrt_lambda);
            Matrix b(m + 1, n);
            b.topRows(m) = xv;
            b.bottomRows(1).setConstant(sqrt_lambda);
            const auto f = [&](const Matrix& hh) {
                return (b - a * hh).squaredNorm();
            };
            const auto grad = [&](const Matrix& hh) -> Matrix {
                return 2.0 * a.transpose() * (a * hh - b);
            };
            h = spg_minimize(h, f, grad, project_nonnegative, inner1);
        }
        // Unconstrained archetype refit Z* from X = Z H, then W from Z* = X W.
        Matrix zstar;
        {
            Matrix hht = h * h.transpose();
            hht.diagonal().array() += 1e-12 * std::max(1.0, hht.trace());
            zstar = hht.ldlt().solve(h * xv.transpose()).transpose(); // m x k
        }
        {
            Matrix a(m + 1, n);
            a.topRows(m) = xv;
            a.bottomRows(1).setConstant(sqrt_lambda);
            Matrix b(m + 1, k);
            b.topRows(m) = zstar;
            b.bottomRows(1).setConstant(sqrt_lambda);
            const auto f = [&](const Matrix& ww) {
                return (b - a * ww).squaredNorm();
            };
            const auto grad = [&](const Matrix& ww) -> Matrix {
                return 2.0 * a.transpose() * (a * ww - b);
            };
            const Matrix w_cand =
                spg_minimize(w, f, grad, project_nonnegative, inner1);
            // The Z* detour optimizes a proxy; keep the step only if the true
            // penalized objective did not get worse, otherwise descend on it
            // directly.
            if (penalized(w_cand, h) <= penalized(w, h)) {
                w = w_cand;
            } else {
                const auto fw = [&](const Matrix& ww) {
                    double pen = 0.0;
                    for (Index c = 0; c < ww.cols(); ++c)
                        pen += (ww.col(c).sum() - 1.0) * (ww.col(c).sum() - 1.0);
                    return (xv - xv * ww * h).squaredNorm() + lambda * pen;
                };
                const auto gw = [&](const Matrix& ww) -> Matrix {
                    Vector coldev = ww.colwise().sum().transpose();
                    coldev.array() -= 1.0;
                    return 2.0 * xv.transpose() *
                               ((xv * ww * h - xv) * h.transpose()) +
                           2.0 * lambda * Matrix::Ones(ww.rows(), 1) *
                               coldev.transpose();
                };
                w = spg_minimize(w, fw, gw, project_nonnegative, inner1);
            }
        }
        ++phase1;
        const double f_now = penalized(w, h);
        if (rel_converged(f_prev, f_now, config.tol)) break;
        f_prev = f_now;
    }

    const double residual =
        std::max(max_column_sum_deviation(w), max_column_sum_deviation(h));

    // Phase 2: renormalize and descend on the exact simplex-constrained
    // objective; this removes the O(1/lambda) bias of the relaxation (the
    // k = 1 solution must hit the column mean to high precision).  nll_trace
    // records this phase.
    for (Index c = 0; c < w.cols(); ++c)
        if (w.col(c).sum() < kDenomFloor) w.col(c).setConstant(1.0);
    for (Index j = 0; j < h.cols(); ++j)
        if (h.col(j).sum() < kDenomFloor) h.col(j).setConstant(1.0);
    normalize_columns(w);
    normalize_columns(h);

    SpgOptions inner2;
    inner2.max_iters = 200;
    inner2.pg_rel_tol = 1e-11;
    std::vector<double> trace;
    trace.push_back(rss(w, h));
    bool converged = false;
    int phase2 = 0;
    while (phase2 < config.max_iter) {
        {
            const Matrix z = xv * w;
            const auto f = [&](const Matrix& hh) {
                return (xv - z * hh).squaredNorm();
            };
            const auto grad = [&](const Matrix& hh) -> Matrix {
                return 2.0 * z.transpose() * (z * hh - xv);
            };
            h = spg_minimize(h, f, grad, project_simplex_columns, inner2);
        }
        {
            const auto f = [&](const Matrix& ww) {
                return (xv - xv * ww * h).squaredNorm();
            };
            const auto grad = [&](const Matrix& ww) -> Matrix {
                return 2.0 * xv.transpose() * ((xv * ww * h - xv) * h.transpose());
            };
            w = spg_minimize(w, f, grad, project_simplex_columns, inner2);
        }
        ++phase2;
        const double r = rss(w, h);
        const double prev = trace.back();
        trace.push_back(r);
        if (rel_converged(prev, r, config.tol)) {
            converged = true;
            break;
        }
    }

    FitConfig echo = config;
    echo.lambda = lambda;
    return package(x, profiles, ModelKind::normal, std::move(w), std::move(h),
                   std::move(trace), echo, stream_id, phase1 + phase2,
                   converged, residual);
}

FitReport fit_model(const DataMatrix& x, ModelKind kind,
                    const FitConfig& config, std::uint64_t stream_id,
                    const std::optional<WarmStart>& warm) {
    switch (kind) {
    case ModelKind::normal: return fit_normal(x, config, stream_id, warm);
    case ModelKind::poisson: return fit_poisson(x, config, stream_id, warm);
    case ModelKind::multinomial:
        return fit_multinomial(x, config, stream_id, warm);
    case ModelKind::bernoulli:
        return fit_bernoulli(x, config, stream_id, warm);
    }
    throw Error("unknown model kind");
}

Matrix archetypes(const ProfileMatrix& profiles, const StochasticMatrix& w) {
    if (profiles.values.cols() != w.rows())
        throw ShapeMismatchError("profiles and w are not conformable");
    return profiles.values * w.matrix();
}

std::vector<std::vector<Index>> generating_observations(
    const StochasticMatrix& w, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw Error("delta must lie in (0, 1)");
    std::vector<std::vector<Index>> sets(static_cast<std::size_t>(w.cols()));
    for (Index c = 0; c < w.cols(); ++c)
        for (Index r = 0; r < w.rows(); ++r)
            if (w.matrix()(r, c) > delta)
                sets[static_cast<std::size_t>(c)].push_back(r);
    return sets;
}

} // namespace paa
