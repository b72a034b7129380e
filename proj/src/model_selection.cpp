#include "paa/model_selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <thread>

namespace paa {

namespace {

// Index-addressed worker pool: each task writes only its own slot, so the
// reduction below is deterministic regardless of the thread count.
void run_pool(int jobs, std::size_t count,
              const std::function<void(std::size_t)>& work) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(jobs, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                work(i);
            }
        });
    for (auto& th : pool) th.join();
}

struct Outcome {
    std::optional<FitReport> report;
    std::exception_ptr error;
};

// Warm start for k+1 archetypes that reproduces a k-archetype model: the last
// mixing column is duplicated and the new loading row starts at (clamped)
// epsilon mass, so the larger model's NLL begins within rounding of the
// smaller one's.
WarmStart duplicate_archetype(const ArchetypalModel& model) {
    const Matrix& w = model.w.matrix();
    const Matrix& h = model.h.matrix();
    const Index k = w.cols();
    WarmStart warm;
    warm.w0.resize(w.rows(), k + 1);
    warm.w0.leftCols(k) = w;
    warm.w0.col(k) = w.col(k - 1);
    warm.h0.resize(k + 1, h.cols());
    warm.h0.topRows(k) = h;
    warm.h0.row(k).setConstant(1e-12);
    warm.w0 = warm.w0.cwiseMax(1e-12);
    warm.h0 = warm.h0.cwiseMax(1e-12);
    normalize_columns(warm.w0);
    normalize_columns(warm.h0);
    return warm;
}

const FitReport* pick_best(const std::vector<Outcome>& outcomes,
                           std::size_t begin, std::size_t end) {
    const FitReport* best = nullptr;
    for (std::size_t i = begin; i < end; ++i)
        if (outcomes[i].report &&
            (!best || outcomes[i].report->final_nll < best->final_nll))
            best = &*outcomes[i].report;
    return best;
}

} // namespace

FitReport run_restarts(const DataMatrix& x, ModelKind kind,
                       const FitConfig& config, int jobs) {
    if (config.restarts < 1) throw Error("restarts must be at least 1");
    const auto count = static_cast<std::size_t>(config.restarts);
    std::vector<Outcome> outcomes(count);
    run_pool(jobs, count, [&](std::size_t i) {
        try {
            outcomes[i].report =
                fit_model(x, kind, config, static_cast<std::uint64_t>(i));
        } catch (...) {
            outcomes[i].error = std::current_exception();
        }
    });
    if (const FitReport* best = pick_best(outcomes, 0, count)) return *best;
    std::rethrow_exception(outcomes.front().error);
}

ElbowCurve elbow_curve(const DataMatrix& x, ModelKind kind, int k_min,
                       int k_max, const FitConfig& base_config, int jobs) {
    if (k_min < 1 || k_min > k_max || k_max > x.cols())
        throw Error("elbow range must satisfy 1 <= k_min <= k_max <= n");
    if (base_config.restarts < 1) throw Error("restarts must be at least 1");
    const int span = k_max - k_min + 1;
    const auto restarts = static_cast<std::size_t>(base_config.restarts);

    // All random (k, stream) fits run in one pool; the warm-start chain below
    // is sequential because each k feeds on the previous best.
    std::vector<Outcome> outcomes(static_cast<std::size_t>(span) * restarts);
    run_pool(jobs, outcomes.size(), [&](std::size_t i) {
        FitConfig config = base_config;
        config.k = k_min + static_cast<int>(i / restarts);
        try {
            outcomes[i].report = fit_model(
                x, kind, config, static_cast<std::uint64_t>(i % restarts));
        } catch (...) {
            outcomes[i].error = std::current_exception();
        }
    });

    ElbowCurve curve;
    std::optional<FitReport> previous;
    for (int idx = 0; idx < span; ++idx) {
        const std::size_t begin = static_cast<std::size_t>(idx) * restarts;
        const FitReport* random_best =
            pick_best(outcomes, begin, begin + restarts);
        std::optional<FitReport> best;
        if (random_best) best = *random_best;
        if (previous) {
            FitConfig config = base_config;
            config.k = k_min + idx;
            try {
                FitReport warm_report =
                    fit_model(x, kind, config, restarts,
                              duplicate_archetype(previous->model));
                if (!best || warm_report.final_nll < best->final_nll)
                    best = std::move(warm_report);
            } catch (...) {
                if (!best) throw;
            }
        }
        if (!best) std::rethrow_exception(outcomes[begin].error);
        curve.entries.push_back(ElbowPoint{k_min + idx, best->final_nll,
                                           best->model.seed_used,
                                           base_config.restarts});
        previous = std::move(best);
    }

    // Heuristic elbow suggestion: normalize both axes to [0,1] and take the
    // point farthest from the straight line through the endpoints.
    curve.suggested_index = 0;
    const auto& e = curve.entries;
    if (e.size() >= 3 && e.back().best_nll != e.front().best_nll) {
        double best_gap = -1.0;
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double u = static_cast<double>(e[i].k - e.front().k) /
                             static_cast<double>(e.back().k - e.front().k);
            const double v = (e[i].best_nll - e.front().best_nll) /
                             (e.back().best_nll - e.front().best_nll);
            const double gap = std::abs(u - v);
            if (gap > best_gap + 1e-15) {
                best_gap = gap;
                curve.suggested_index = static_cast<int>(i);
            }
        }
    }
    return curve;
}

} // namespace paa
