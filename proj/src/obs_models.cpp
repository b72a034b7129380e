#include "paa/obs_models.hpp"

#include <cmath>
#include <string>

namespace paa {

namespace {

constexpr double kLogFloor = 1e-300;

double checked_log(double v, Index i, Index j) {
    if (v < kLogFloor)
        throw NonFiniteError("log argument underflow at (" + std::to_string(i) +
                             ", " + std::to_string(j) + ")");
    return std::log(v);
}

void check_shapes(const Matrix& x, const Matrix& profiles, const Matrix& w,
                  const Matrix& h) {
    if (profiles.rows() != x.rows() || profiles.cols() != x.cols())
        throw ShapeMismatchError("profile matrix shape does not match data");
    if (w.rows() != x.cols() || h.cols() != x.cols() || w.cols() != h.rows())
        throw ShapeMismatchError("factor shapes do not match data");
}

// a_ij / b_ij where a_ij > 0 and zero elsewhere, so that cells the likelihood
// ignores (x = 0 against a zero reconstruction) do not poison the gradient.
Matrix guarded_ratio(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            if (a(i, j) > 0.0) {
                if (b(i, j) < kLogFloor)
                    throw NonFiniteError("reconstruction underflow at (" +
                                         std::to_string(i) + ", " +
                                         std::to_string(j) + ")");
                out(i, j) = a(i, j) / b(i, j);
            }
    return out;
}

} // namespace

ProfileMatrix estimate_profiles(const DataMatrix& x, ModelKind kind,
                                double prob_floor) {
    if (x.domain() != required_domain(kind))
        throw DomainMismatchError(std::string("model ") + kind_name(kind) +
                                  " requires " +
                                  domain_name(required_domain(kind)) +
                                  " data, got " + domain_name(x.domain()));
    ProfileMatrix out;
    out.kind = kind;
    switch (kind) {
    case ModelKind::normal:
    case ModelKind::poisson:
        // The per-observation MLE is the observation itself (mean / rate).
        out.values = x.values();
        break;
    case ModelKind::bernoulli:
        out.values = x.values().array().max(prob_floor).min(1.0 - prob_floor);
        break;
    case ModelKind::multinomial: {
        out.values = x.values();
        for (Index j = 0; j < out.values.cols(); ++j) {
            const double total = out.values.col(j).sum();
            if (total <= 0.0)
                throw EmptyDocumentError("observation " + std::to_string(j) +
                                         " has zero total count");
            out.values.col(j) /= total;
        }
        break;
    }
    }
    return out;
}

double neg_log_likelihood_raw(const Matrix& x, const Matrix& profiles,
                              const Matrix& w, const Matrix& h,
                              ModelKind kind) {
    check_shapes(x, profiles, w, h);
    const Matrix recon = (profiles * w) * h;
    double nll = 0.0;
    switch (kind) {
    case ModelKind::normal:
        nll = (x - recon).squaredNorm();
        break;
    case ModelKind::poisson:
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i) {
                nll += recon(i, j);
                if (x(i, j) > 0.0)
                    nll -= x(i, j) * checked_log(recon(i, j), i, j);
            }
        break;
    case ModelKind::multinomial:
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i)
                if (x(i, j) > 0.0)
                    nll -= x(i, j) * checked_log(recon(i, j), i, j);
        break;
    case ModelKind::bernoulli: {
        // complement reconstruction in the same relaxed parameterization the
        // updates and gradients use; equals 1 - recon on stochastic factors
        const Matrix recon_q =
            ((Matrix::Ones(profiles.rows(), profiles.cols()) - profiles) * w) *
            h;
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i) {
                if (x(i, j) > 0.0)
                    nll -= x(i, j) * checked_log(recon(i, j), i, j);
                if (x(i, j) < 1.0)
                    nll -= (1.0 - x(i, j)) * checked_log(recon_q(i, j), i, j);
            }
        break;
    }
    }
    if (!std::isfinite(nll))
        throw NonFiniteError("non-finite negative log-likelihood");
    return nll;
}

double neg_log_likelihood(const DataMatrix& x, const ProfileMatrix& profiles,
                          const StochasticMatrix& w, const StochasticMatrix& h,
                          ModelKind kind) {
    if (profiles.kind != kind)
        throw DomainMismatchError(
            std::string("profile matrix was built for ") +
            kind_name(profiles.kind) + ", likelihood requested for " +
            kind_name(kind));
    return neg_log_likelihood_raw(x.values(), profiles.values, w.matrix(),
                                  h.matrix(), kind);
}

NllGradients nll_gradients(const Matrix& x, const Matrix& profiles,
                           const Matrix& w, const Matrix& h, ModelKind kind) {
    check_shapes(x, profiles, w, h);
    const Matrix pw = profiles * w; // m x k
    const Matrix recon = pw * h;    // m x n
    NllGradients out;
    switch (kind) {
    case ModelKind::normal: {
        const Matrix resid = recon - x;
        out.dh = 2.0 * pw.transpose() * resid;
        out.dw = 2.0 * profiles.transpose() * (resid * h.transpose());
        break;
    }
    case ModelKind::poisson: {
        const Matrix s = Matrix::Ones(x.rows(), x.cols()) -
                         guarded_ratio(x, recon); // d nll / d recon
        out.dh = pw.transpose() * s;
        out.dw = profiles.transpose() * (s * h.transpose());
        break;
    }
    case ModelKind::multinomial: {
        const Matrix s = -guarded_ratio(x, recon);
        out.dh = pw.transpose() * s;
        out.dw = profiles.transpose() * (s * h.transpose());
        break;
    }
    case ModelKind::bernoulli: {
        const Matrix y = Matrix::Ones(x.rows(), x.cols()) - x;
        const Matrix q = Matrix::Ones(x.rows(), x.cols()) - profiles;
        const Matrix qw = q * w;
        const Matrix recon_q = qw * h;
        const Matrix sx = -guarded_ratio(x, recon);
        const Matrix sy = -guarded_ratio(y, recon_q);
        out.dh = pw.transpose() * sx + qw.transpose() * sy;
        out.dw = profiles.transpose() * (sx * h.transpose()) +
                 q.transpose() * (sy * h.transpose());
        break;
    }
    }
    return out;
}

double deviance(const Vector& x_col, const Vector& fitted_mean, ModelKind kind,
                double prob_floor) {
    if (x_col.size() != fitted_mean.size())
        throw ShapeMismatchError("deviance: vector lengths differ");
    const auto safe = [](double v) { return std::max(v, kLogFloor); };
    double dev = 0.0;
    switch (kind) {
    case ModelKind::normal:
        dev = (x_col - fitted_mean).squaredNorm();
        break;
    case ModelKind::poisson:
        for (Index i = 0; i < x_col.size(); ++i) {
            const double x = x_col(i);
            const double mu = fitted_mean(i);
            dev += 2.0 * (mu - x);
            if (x > 0.0) dev += 2.0 * x * std::log(x / safe(mu));
        }
        break;
    case ModelKind::bernoulli:
        for (Index i = 0; i < x_col.size(); ++i) {
            const double x = x_col(i);
            const double mu = fitted_mean(i);
            // saturated probability clamped away from {0,1}
            const double sat =
                std::min(std::max(x, prob_floor), 1.0 - prob_floor);
            dev += 2.0 * (x * std::log(sat / safe(mu)) +
                          (1.0 - x) * std::log((1.0 - sat) / safe(1.0 - mu)));
        }
        break;
    case ModelKind::multinomial: {
        const double total = x_col.sum();
        if (total <= 0.0)
            throw EmptyDocumentError("deviance: zero total count");
        for (Index i = 0; i < x_col.size(); ++i) {
            const double x = x_col(i);
            if (x > 0.0)
                dev += 2.0 * x * std::log((x / total) / safe(fitted_mean(i)));
        }
        break;
    }
    }
    if (!std::isfinite(dev)) throw NonFiniteError("non-finite deviance");
    return dev;
}

} // namespace paa
