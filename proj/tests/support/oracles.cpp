#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void grid_rec(int parts_left, int units_left, paa::Vector& current, int units,
              std::vector<paa::Vector>& out) {
    const int pos = static_cast<int>(current.size()) - parts_left;
    if (parts_left == 1) {
        current(pos) = static_cast<double>(units_left) / units;
        out.push_back(current);
        return;
    }
    for (int take = 0; take <= units_left; ++take) {
        current(pos) = static_cast<double>(take) / units;
        grid_rec(parts_left - 1, units_left - take, current, units, out);
    }
}

paa::Matrix scalar_profiles(const paa::Matrix& x, paa::ModelKind kind) {
    paa::Matrix profiles = x;
    if (kind == paa::ModelKind::bernoulli) {
        for (paa::Index j = 0; j < x.cols(); ++j)
            for (paa::Index i = 0; i < x.rows(); ++i)
                profiles(i, j) = std::min(1.0 - 1e-6, std::max(1e-6, x(i, j)));
    } else if (kind == paa::ModelKind::multinomial) {
        for (paa::Index j = 0; j < x.cols(); ++j) {
            double total = 0.0;
            for (paa::Index i = 0; i < x.rows(); ++i) total += x(i, j);
            for (paa::Index i = 0; i < x.rows(); ++i)
                profiles(i, j) = x(i, j) / total;
        }
    }
    return profiles;
}

// NLL of a single observation column against its mean vector; +inf instead of
// an exception so boundary grid points are simply never optimal.
double column_nll(const paa::Vector& x_col, const paa::Vector& mean,
                  paa::ModelKind kind) {
    double total = 0.0;
    for (paa::Index i = 0; i < x_col.size(); ++i) {
        const double x = x_col(i);
        const double mu = mean(i);
        switch (kind) {
            case paa::ModelKind::normal:
                total += (x - mu) * (x - mu);
                break;
            case paa::ModelKind::poisson:
                if (x > 0.0) {
                    if (mu <= 0.0) return kInf;
                    total += -x * std::log(mu);
                }
                total += mu;
                break;
            case paa::ModelKind::bernoulli:
                if (x > 0.0) {
                    if (mu <= 0.0) return kInf;
                    total += -x * std::log(mu);
                }
                if (x < 1.0) {
                    if (mu >= 1.0) return kInf;
                    total += -(1.0 - x) * std::log(1.0 - mu);
                }
                break;
            case paa::ModelKind::multinomial:
                if (x > 0.0) {
                    if (mu <= 0.0) return kInf;
                    total += -x * std::log(mu);
                }
                break;
        }
    }
    return total;
}

} // namespace

std::vector<paa::Vector> simplex_grid(int parts, int units) {
    std::vector<paa::Vector> out;
    paa::Vector current(parts);
    grid_rec(parts, units, current, units, out);
    return out;
}

double scalar_nll(const paa::Matrix& x, paa::ModelKind kind,
                  const paa::Matrix& w, const paa::Matrix& h) {
    const paa::Matrix profiles = scalar_profiles(x, kind);
    const paa::Index m = x.rows(), n = x.cols(), k = w.cols();
    paa::Matrix z = paa::Matrix::Zero(m, k);
    for (paa::Index i = 0; i < m; ++i)
        for (paa::Index c = 0; c < k; ++c)
            for (paa::Index o = 0; o < n; ++o)
                z(i, c) += profiles(i, o) * w(o, c);
    double total = 0.0;
    for (paa::Index j = 0; j < n; ++j) {
        paa::Vector mean = paa::Vector::Zero(m);
        for (paa::Index i = 0; i < m; ++i)
            for (paa::Index c = 0; c < k; ++c) mean(i) += z(i, c) * h(c, j);
        total += column_nll(x.col(j), mean, kind);
    }
    return total;
}

double grid_min_nll(const paa::Matrix& x, paa::ModelKind kind, int k,
                    int units) {
    const paa::Index m = x.rows(), n = x.cols();
    const paa::Matrix profiles = scalar_profiles(x, kind);
    const std::vector<paa::Vector> w_cols =
        simplex_grid(static_cast<int>(n), units);
    const std::vector<paa::Vector> h_cols = simplex_grid(k, units);

    std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
    double best = kInf;
    while (true) {
        paa::Matrix z = paa::Matrix::Zero(m, k);
        for (int c = 0; c < k; ++c) {
            const paa::Vector& wc = w_cols[pick[static_cast<std::size_t>(c)]];
            for (paa::Index i = 0; i < m; ++i)
                for (paa::Index o = 0; o < n; ++o)
                    z(i, c) += profiles(i, o) * wc(o);
        }
        // the objective separates over observations once W is fixed
        double total = 0.0;
        for (paa::Index j = 0; j < n && total < kInf; ++j) {
            double col_best = kInf;
            for (const paa::Vector& hc : h_cols) {
                paa::Vector mean = paa::Vector::Zero(m);
                for (paa::Index i = 0; i < m; ++i)
                    for (int c = 0; c < k; ++c) mean(i) += z(i, c) * hc(c);
                col_best = std::min(col_best, column_nll(x.col(j), mean, kind));
            }
            total += col_best;
        }
        best = std::min(best, total);

        int slot = k - 1;
        while (slot >= 0) {
            if (++pick[static_cast<std::size_t>(slot)] < w_cols.size()) break;
            pick[static_cast<std::size_t>(slot)] = 0;
            --slot;
        }
        if (slot < 0) break;
    }
    return best;
}

paa::Matrix fd_gradient(const std::function<double(const paa::Matrix&)>& f,
                        const paa::Matrix& x0, double eps) {
    paa::Matrix grad(x0.rows(), x0.cols());
    paa::Matrix point = x0;
    for (paa::Index j = 0; j < x0.cols(); ++j) {
        for (paa::Index i = 0; i < x0.rows(); ++i) {
            point(i, j) = x0(i, j) + eps;
            const double up = f(point);
            point(i, j) = x0(i, j) - eps;
            const double down = f(point);
            point(i, j) = x0(i, j);
            grad(i, j) = (up - down) / (2.0 * eps);
        }
    }
    return grad;
}

double min_assignment_total(const paa::Matrix& dist) {
    const paa::Index k = dist.rows();
    std::vector<paa::Index> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), paa::Index{0});
    double best = kInf;
    do {
        double total = 0.0;
        for (paa::Index r = 0; r < k; ++r)
            total += dist(r, perm[static_cast<std::size_t>(r)]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

void multinomial_em_step(const paa::Matrix& x, paa::Matrix& w,
                         paa::Matrix& h) {
    const paa::Index m = x.rows(), n = x.cols(), k = w.cols();
    const paa::Matrix profiles = scalar_profiles(x, paa::ModelKind::multinomial);
    auto means = [&](const paa::Matrix& wc, const paa::Matrix& hc) {
        paa::Matrix z = paa::Matrix::Zero(m, k);
        for (paa::Index i = 0; i < m; ++i)
            for (paa::Index c = 0; c < k; ++c)
                for (paa::Index o = 0; o < n; ++o)
                    z(i, c) += profiles(i, o) * wc(o, c);
        paa::Matrix r = paa::Matrix::Zero(m, n);
        for (paa::Index i = 0; i < m; ++i)
            for (paa::Index j = 0; j < n; ++j)
                for (paa::Index c = 0; c < k; ++c)
                    r(i, j) += z(i, c) * hc(c, j);
        return std::pair<paa::Matrix, paa::Matrix>(z, r);
    };

    auto [z_old, r_old] = means(w, h);
    paa::Matrix h_next(k, n);
    for (paa::Index j = 0; j < n; ++j) {
        double col_sum = 0.0;
        for (paa::Index c = 0; c < k; ++c) {
            double acc = 0.0;
            for (paa::Index i = 0; i < m; ++i)
                acc += z_old(i, c) * x(i, j) / r_old(i, j);
            h_next(c, j) = h(c, j) * acc;
            col_sum += h_next(c, j);
        }
        for (paa::Index c = 0; c < k; ++c) h_next(c, j) /= col_sum;
    }
    h = h_next;

    auto [z_mid, r_mid] = means(w, h);
    paa::Matrix w_next(n, k);
    for (paa::Index c = 0; c < k; ++c) {
        double col_sum = 0.0;
        for (paa::Index o = 0; o < n; ++o) {
            double acc = 0.0;
            for (paa::Index i = 0; i < m; ++i)
                for (paa::Index j = 0; j < n; ++j)
                    acc += profiles(i, o) * (x(i, j) / r_mid(i, j)) * h(c, j);
            w_next(o, c) = w(o, c) * acc;
            col_sum += w_next(o, c);
        }
        for (paa::Index o = 0; o < n; ++o) w_next(o, c) /= col_sum;
    }
    w = w_next;
}

double poisson_penalized_objective(const paa::Matrix& x,
                                   const paa::Matrix& profiles,
                                   const paa::Matrix& w, const paa::Matrix& h,
                                   double penalty) {
    const paa::Index m = x.rows(), n = x.cols(), k = w.cols();
    double total = 0.0;
    for (paa::Index j = 0; j < n; ++j) {
        for (paa::Index i = 0; i < m; ++i) {
            double mu = 0.0;
            for (paa::Index c = 0; c < k; ++c) {
                double zc = 0.0;
                for (paa::Index o = 0; o < n; ++o)
                    zc += profiles(i, o) * w(o, c);
                mu += zc * h(c, j);
            }
            if (x(i, j) > 0.0) total += -x(i, j) * std::log(mu);
            total += mu;
        }
    }
    for (paa::Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (paa::Index c = 0; c < k; ++c) s += h(c, j);
        total += penalty * (s - std::log(s));
    }
    for (paa::Index c = 0; c < k; ++c) {
        double s = 0.0;
        for (paa::Index o = 0; o < n; ++o) s += w(o, c);
        total += penalty * (s - std::log(s));
    }
    return total;
}

} // namespace oracle
