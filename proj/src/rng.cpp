#include "paa/rng.hpp"

#include <cmath>

namespace paa {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 step: advances *state and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

Rng::Rng(std::uint64_t seed) {
    // Standard xoshiro seeding: four SplitMix64 outputs.
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw Error("uniform_int: empty range");
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(next_u64()); // full width
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
}

bool Rng::bernoulli(double p) {
    return next_double() < p;
}

double Rng::normal() {
    if (have_cached_normal_) {
        have_cached_normal_ = false;
        return cached_normal_;
    }
    double u1;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(a);
    have_cached_normal_ = true;
    return r * std::cos(a);
}

double Rng::gamma(double shape) {
    return std::exp(log_gamma_draw(shape));
}

double Rng::log_gamma_draw(double shape) {
    if (!(shape > 0.0)) throw Error("gamma: shape must be positive");
    if (shape < 1.0) {
        // G(a) = G(a + 1) * U^(1/a); taking logs keeps tiny shapes finite.
        double u;
        do {
            u = next_double();
        } while (u <= 0.0);
        return log_gamma_draw(shape + 1.0) + std::log(u) / shape;
    }
    // Marsaglia-Tsang squeeze for shape >= 1.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = next_double();
        if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
        if (u > 0.0 &&
            std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return std::log(d * v);
    }
}

Vector Rng::dirichlet(double alpha, Index dim) {
    if (dim < 1) throw Error("dirichlet: dimension must be positive");
    Vector logs(dim);
    for (Index i = 0; i < dim; ++i) logs(i) = log_gamma_draw(alpha);
    // softmax; subtracting the max keeps exp in range for alpha << 1
    const double top = logs.maxCoeff();
    Vector out = (logs.array() - top).exp();
    out /= out.sum();
    return out;
}

int Rng::poisson(double rate) {
    if (rate < 0.0 || !std::isfinite(rate))
        throw Error("poisson: invalid rate");
    if (rate == 0.0) return 0;
    // Split large rates so exp(-rate) stays representable.
    if (rate > 60.0) {
        const int half = poisson(rate / 2.0);
        return half + poisson(rate - rate / 2.0);
    }
    const double limit = std::exp(-rate);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= next_double();
    } while (p > limit);
    return k - 1;
}

std::vector<int> Rng::multinomial(int trials, const Vector& probs) {
    if (trials < 0) throw Error("multinomial: negative trial count");
    std::vector<int> counts(static_cast<std::size_t>(probs.size()), 0);
    const double total = probs.sum();
    if (!(total > 0.0)) throw ZeroColumnError("multinomial: zero probability mass");
    for (int t = 0; t < trials; ++t) {
        double u = next_double() * total;
        Index cat = probs.size() - 1;
        for (Index i = 0; i < probs.size(); ++i) {
            u -= probs(i);
            if (u < 0.0) {
                cat = i;
                break;
            }
        }
        counts[static_cast<std::size_t>(cat)]++;
    }
    return counts;
}

Rng derive_rng(std::uint64_t master_seed, std::uint64_t stream_id) {
    // Feed both identifiers through the SplitMix64 mixer so that neighboring
    // seeds or streams do not produce correlated states.
    std::uint64_t a = master_seed;
    const std::uint64_t mixed_master = splitmix64(a);
    std::uint64_t b = stream_id ^ rotl(mixed_master, 23);
    const std::uint64_t mixed_stream = splitmix64(b);
    return Rng(mixed_master ^ rotl(mixed_stream, 17));
}

} // namespace paa
